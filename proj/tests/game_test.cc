// Copyright 2026 The midctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "midctl/game.h"

#include <cmath>
#include <vector>

#include "doctest.h"

namespace midctl {
namespace {

// character 1 moved so its head sits just past character 0's lead hand,
// which approaches at `speed`
MatchState PunchSetup(const CharacterModel& m, double speed) {
  MatchState match = NewMatch(m, 1.0, 1);
  WorldState& w = match.world;
  const Vec2 hand = ForwardKinematics(m, w.characters[0]).disc[m.hand_bone(Side::kLeft)];
  const Vec2 head = ForwardKinematics(m, w.characters[1]).disc[m.head_bone()];
  const double dx = 0.05;
  w.characters[1].root_x += hand.x + dx - head.x;
  const double dy = head.y - hand.y;
  w.characters[0].root_vx = speed * std::hypot(dx, dy) / dx;
  match.players[0].task = Task::Punch(Side::kLeft, BodyTarget::kHead, 0.0);
  return match;
}

std::array<std::vector<double>, 2> Hold(const CharacterModel& m) {
  return {m.reference_pose(), m.reference_pose()};
}

TEST_CASE("score table") {
  PunchEvent e;
  e.power = 1000;
  CHECK(ScorePunch(e) == 1);
  e.power = 3000;
  CHECK(ScorePunch(e) == 10);
  e.power = 2000;
  CHECK(ScorePunch(e) == 6);
  int last = 0;
  for (double p = 1000; p <= 3000; p += 7.0) {
    e.power = p;
    const int s = ScorePunch(e);
    CHECK(s >= last);
    CHECK(s >= 1);
    CHECK(s <= 10);
    last = s;
  }
}

TEST_CASE("punch command") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 0);
  match.players[1].cma = FreshCma(m, c);
  CHECK(ApplyCommand(m, match, Command::SetPunch(1, Side::kRight, BodyTarget::kHead), c));
  const Task& t = match.players[1].task;
  CHECK(t.kind == TaskKind::kPunch);
  CHECK(t.hand == Side::kRight);
  CHECK(t.punch_target == BodyTarget::kHead);
  CHECK(t.punch_flag == PunchFlag::kNotHappened);
  CHECK_FALSE(match.players[1].cma.has_value());
  CHECK(match.players[0].task.kind == TaskKind::kNull);
}

TEST_CASE("move command clamps the target to the arm's reach") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 0);
  const BodyPose pose = ForwardKinematics(m, match.world.characters[0]);
  const Vec2 hand = pose.disc[m.hand_bone(Side::kRight)];
  const Vec2 shoulder = pose.joint[m.shoulder_bone(Side::kRight)];

  CHECK(ApplyCommand(m, match, Command::SetMove(0, Side::kRight, {0.05, 0.02}), c));
  CHECK(match.players[0].task.move_target.x == doctest::Approx(hand.x + 0.05));
  CHECK(match.players[0].task.move_target.y == doctest::Approx(hand.y + 0.02));

  CHECK(ApplyCommand(m, match, Command::SetMove(0, Side::kRight, {3.0, 1.0}), c));
  const Vec2 target = match.players[0].task.move_target;
  CHECK((target - shoulder).norm() == doctest::Approx(m.arm_reach(Side::kRight)));
  // still along the drag direction from the shoulder
  const Vec2 wanted = hand + Vec2{3.0, 1.0} - shoulder;
  const Vec2 got = target - shoulder;
  CHECK(std::abs(wanted.x * got.y - wanted.y * got.x) < 1e-9);

  CHECK_FALSE(ApplyCommand(m, match, Command::SetMove(0, Side::kRight, {NAN, 0}), c));
}

TEST_CASE("root motion commands") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 0);
  CHECK(ApplyCommand(m, match, Command::RootMove(0, RootDirection::kForward), c));
  CHECK(match.world.characters[0].root_vx == doctest::Approx(0.3));
  CHECK(ApplyCommand(m, match, Command::RootMove(1, RootDirection::kForward), c));
  CHECK(match.world.characters[1].root_vx == doctest::Approx(-0.3));
  CHECK(ApplyCommand(m, match, Command::RootMove(0, RootDirection::kBack), c));
  CHECK(match.world.characters[0].root_vx == doctest::Approx(-0.3));
  CHECK(ApplyCommand(m, match, Command::RootMove(0, RootDirection::kStop), c));
  CHECK(match.world.characters[0].root_vx == 0.0);
  CHECK(match.players[0].task.kind == TaskKind::kNull);
  CHECK_FALSE(ApplyCommand(m, match, Command::RootMove(2, RootDirection::kStop), c));
}

TEST_CASE("commands are rejected once the match is over") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 0);
  match.phase = MatchPhase::kFinished;
  const MatchState before = match;
  CHECK_FALSE(ApplyCommand(m, match, Command::SetPunch(0, Side::kLeft, BodyTarget::kChest), c));
  CHECK(match.players[0].task == before.players[0].task);
  CHECK_THROWS_AS(Tick(m, match, {}, c), GameError);
}

TEST_CASE("task completion and timeout") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kLeft);

  Task move = Task::Move(Side::kLeft, hand + Vec2{0.01, 0}, 0);
  CHECK(UpdateTask(m, w, 0, move, c).kind == TaskKind::kNull);
  move.move_target = hand + Vec2{0.03, 0};
  CHECK(UpdateTask(m, w, 0, move, c) == move);

  w.clock = 0.3;
  Task punch = Task::Punch(Side::kLeft, BodyTarget::kHead, 0);
  CHECK(UpdateTask(m, w, 0, punch, c) == punch);
  w.clock = 0.51;
  CHECK(UpdateTask(m, w, 0, punch, c).kind == TaskKind::kNull);
  CHECK(UpdateTask(m, w, 0, move, c).kind == TaskKind::kNull);
  CHECK(UpdateTask(m, w, 0, punch, c).started_at == doctest::Approx(0.51));
}

TEST_CASE("punch completes after the return to guard") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  w.clock = 0.2;
  Task punch = Task::Punch(Side::kLeft, BodyTarget::kHead, 0);
  punch.punch_flag = PunchFlag::kHappenedNow;
  CHECK(UpdateTask(m, w, 0, punch, c) == punch);
  punch.punch_flag = PunchFlag::kHappenedBefore;
  CHECK(UpdateTask(m, w, 0, punch, c).kind == TaskKind::kNull);
  // hand well away from the relax position: still returning
  w.characters[0].q[m.dof_of_bone(m.shoulder_bone(Side::kLeft))] += 0.5;
  CHECK(UpdateTask(m, w, 0, punch, c) == punch);
}

TEST_CASE("idle match stays still") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 3);
  for (int i = 0; i < 30; ++i) Tick(m, match, {}, c);
  double worst = 0.0;
  for (const CharacterState& s : match.world.characters) {
    for (int d = 0; d < m.dof(); ++d) worst = std::max(worst, std::abs(s.qdot[d]));
  }
  CHECK(worst < 0.05);
  CHECK(match.frame == 30);
  CHECK(match.world.clock == doctest::Approx(1.0));
}

TEST_CASE("landed punch scores and lights the target red") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = PunchSetup(m, 3.5);
  const auto events = Advance(m, match, Hold(m), c);
  REQUIRE(events.size() == 1);
  CHECK(events[0].power == 3000.0);
  CHECK(match.players[0].score == 10);
  CHECK(match.players[1].score == 0);
  CHECK(match.players[0].task.punch_flag == PunchFlag::kHappenedNow);
  const HudState hud = MakeHud(m, match, events);
  CHECK(hud.parts[1][m.head_bone()] == Highlight::kRed);
  CHECK(hud.parts[0][m.hand_bone(Side::kLeft)] == Highlight::kGreen);
  // next frame: no new event, no score change, no red
  const auto again = Advance(m, match, Hold(m), c);
  CHECK(again.empty());
  CHECK(match.players[0].score == 10);
  CHECK(MakeHud(m, match, again).parts[1][m.head_bone()] == Highlight::kGreen);
}

TEST_CASE("crossing the win score finishes the match that tick") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = PunchSetup(m, 3.5);
  match.players[0].score = 95;
  Advance(m, match, Hold(m), c);
  CHECK(match.players[0].score == 105);
  CHECK(match.phase == MatchPhase::kFinished);
  CHECK(match.winner == 0);
  CHECK_THROWS_AS(Advance(m, match, Hold(m), c), GameError);
}

TEST_CASE("hud colours follow tasks") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 0);
  HudState hud = MakeHud(m, match, {});
  for (const auto& side : hud.parts) {
    for (Highlight h : side) CHECK(h == Highlight::kNone);
  }
  CHECK_FALSE(hud.guides[0].active);

  ApplyCommand(m, match, Command::SetPunch(0, Side::kRight, BodyTarget::kChest), c);
  ApplyCommand(m, match, Command::SetMove(1, Side::kLeft, {0.1, 0.0}), c);
  hud = MakeHud(m, match, {});
  int green = 0;
  for (const auto& side : hud.parts) {
    for (Highlight h : side) green += h == Highlight::kGreen;
  }
  CHECK(green == 2);
  CHECK(hud.parts[0][m.hand_bone(Side::kRight)] == Highlight::kGreen);
  CHECK(hud.parts[1][m.chest_bone()] == Highlight::kGreen);
  CHECK_FALSE(hud.guides[0].active);
  CHECK(hud.guides[1].active);
  CHECK(hud.guides[1].hand == Side::kLeft);
  CHECK(hud.guides[1].to == match.players[1].task.move_target);
}

TEST_CASE("task age stays bounded and ticks are deterministic") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState a = NewMatch(m, 3.0, 9);
  MatchState b = NewMatch(m, 3.0, 9);
  const std::vector<Command> cmds = {Command::SetPunch(0, Side::kLeft, BodyTarget::kHead),
                                     Command::SetMove(1, Side::kRight, {0.0, 0.1})};
  for (int i = 0; i < 24; ++i) {
    const auto& now = i == 0 ? cmds : std::vector<Command>{};
    Tick(m, a, now, c);
    Tick(m, b, now, c);
    for (const PlayerState& p : a.players) {
      CHECK(p.task.age(a.world.clock) <= c.max_task_time + c.dt + 1e-9);
    }
  }
  CHECK(a.world == b.world);
  CHECK(a.players[0].task == b.players[0].task);
  // out of reach at 3 m: the punch timed out
  CHECK(a.players[0].task.kind == TaskKind::kNull);
  CHECK(a.players[0].score == 0);
}

TEST_CASE("divergence aborts the match and keeps the last world") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  MatchState match = NewMatch(m, 1.0, 0);
  match.world.characters[1].qdot[2] = INFINITY;
  const WorldState before = match.world;
  CHECK(Advance(m, match, Hold(m), c).empty());
  CHECK(match.phase == MatchPhase::kAborted);
  CHECK(match.diagnostic.find("diverged") != std::string::npos);
  CHECK(match.frame == 0);
  CHECK(match.world.clock == before.clock);
}

}  // namespace
}  // namespace midctl
