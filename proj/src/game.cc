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

#include <algorithm>
#include <cmath>

namespace midctl {

const char* ToString(CommandKind kind) {
  switch (kind) {
    case CommandKind::kSetMove: return "setMove";
    case CommandKind::kSetPunch: return "setPunch";
    case CommandKind::kRootMove: return "rootMove";
  }
  return "?";
}

const char* ToString(RootDirection direction) {
  switch (direction) {
    case RootDirection::kStop: return "stop";
    case RootDirection::kForward: return "fwd";
    case RootDirection::kBack: return "back";
  }
  return "?";
}

Command Command::SetMove(int player, Side hand, Vec2 drag) {
  Command c;
  c.player = player;
  c.kind = CommandKind::kSetMove;
  c.hand = hand;
  c.drag = drag;
  return c;
}

Command Command::SetPunch(int player, Side hand, BodyTarget target) {
  Command c;
  c.player = player;
  c.kind = CommandKind::kSetPunch;
  c.hand = hand;
  c.target = target;
  return c;
}

Command Command::RootMove(int player, RootDirection direction) {
  Command c;
  c.player = player;
  c.kind = CommandKind::kRootMove;
  c.direction = direction;
  return c;
}

MatchState NewMatch(const CharacterModel& model, double separation,
                    uint64_t seed) {
  MatchState m;
  m.world = InitialWorld(model, separation);
  m.seed = seed;
  return m;
}

int ScorePunch(const PunchEvent& event) {
  const double x = 9.0 * (event.power - 1000.0) / 2000.0;
  return std::clamp(1 + static_cast<int>(std::floor(x + 0.5)), 1, 10);
}

namespace {

void SetTask(PlayerState& p, const Task& task) {
  p.task = task;
  p.cma.reset();
}

}  // namespace

bool ApplyCommand(const CharacterModel& model, MatchState& match,
                  const Command& cmd, const Config& config) {
  if (match.phase != MatchPhase::kRunning) return false;
  if (cmd.player != 0 && cmd.player != 1) return false;
  PlayerState& p = match.players[cmd.player];
  CharacterState& me = match.world.characters[cmd.player];
  const double now = match.world.clock;
  switch (cmd.kind) {
    case CommandKind::kSetMove: {
      if (!std::isfinite(cmd.drag.x) || !std::isfinite(cmd.drag.y)) return false;
      const BodyPose pose = ForwardKinematics(model, me);
      const Vec2 shoulder = pose.joint[model.shoulder_bone(cmd.hand)];
      Vec2 target = pose.disc[model.hand_bone(cmd.hand)] + cmd.drag;
      const Vec2 off = target - shoulder;
      const double reach = model.arm_reach(cmd.hand);
      if (off.norm() > reach) target = shoulder + off * (reach / off.norm());
      SetTask(p, Task::Move(cmd.hand, target, now));
      return true;
    }
    case CommandKind::kSetPunch:
      SetTask(p, Task::Punch(cmd.hand, cmd.target, now));
      return true;
    case CommandKind::kRootMove: {
      const double dir = cmd.direction == RootDirection::kForward ? 1.0
                         : cmd.direction == RootDirection::kBack  ? -1.0
                                                                  : 0.0;
      me.root_vx = dir * me.facing * config.root_speed;
      return true;
    }
  }
  return false;
}

Task UpdateTask(const CharacterModel& model, const WorldState& world,
                int self, const Task& task, const Config& config) {
  const double now = world.clock;
  if (task.age(now) > config.max_task_time + 1e-9) return Task::Null(now);
  if (task.kind == TaskKind::kNull) return task;
  const CharacterState& me = world.characters[self];
  const Vec2 hand = HandPosition(model, me, task.hand);
  if (task.kind == TaskKind::kMove) {
    if ((hand - task.move_target).norm() <= config.sigma_move) return Task::Null(now);
    return task;
  }
  if (task.punch_flag == PunchFlag::kHappenedBefore &&
      (hand - HandRelaxPosition(model, me, task.hand)).norm() <=
          config.punch_relax_factor * config.sigma_hand_relax) {
    return Task::Null(now);
  }
  return task;
}

void UpdateTasks(const CharacterModel& model, MatchState& match,
                 const Config& config) {
  for (int i = 0; i < 2; ++i) {
    PlayerState& p = match.players[i];
    const Task next = UpdateTask(model, match.world, i, p.task, config);
    if (next.kind == TaskKind::kNull && p.task.kind == TaskKind::kNull) {
      p.task = next;  // idle renewal keeps the planner state
    } else if (!(next == p.task)) {
      SetTask(p, next);
    }
  }
}

PlanResult PlanPlayer(const CharacterModel& model, const MatchState& match,
                      int player, const Config& config) {
  const PlayerState& p = match.players[player];
  const PlayerState& other = match.players[1 - player];
  PlanningContext ctx;
  ctx.model = &model;
  ctx.world = match.world;
  ctx.self = player;
  ctx.task = p.task;
  if (other.last_best) {
    ctx.opponent_spline = Shift(*other.last_best, config.dt,
                                model.spline_bounds(config.horizon, config.knot_spacing));
  }
  ctx.last_best = p.last_best;
  ctx.cma = p.cma;
  ctx.seed = MixSeed(match.seed, static_cast<uint64_t>(player));
  ctx.frame = match.frame;
  return Plan(ctx, config);
}

std::vector<PunchEvent> Advance(const CharacterModel& model, MatchState& match,
                                const std::array<std::vector<double>, 2>& actions,
                                const Config& config) {
  if (match.phase != MatchPhase::kRunning) {
    throw GameError("match is not running");
  }
  for (int i = 0; i < 2; ++i) {
    if (actions[i].size() != static_cast<size_t>(model.dof())) {
      throw GameError("action size does not match the model");
    }
    match.world.punches[i] = SlotFor(match.players[i].task);
  }
  WorldState next = match.world;
  std::vector<PunchEvent> events;
  try {
    events = StepWorld(model, next, {{actions[0], actions[1]}}, config);
  } catch (const SimulationDiverged& e) {
    match.phase = MatchPhase::kAborted;
    match.diagnostic = std::string("simulation diverged at frame ") +
                       std::to_string(match.frame) + ": " + e.what();
    return {};
  }
  match.world = next;
  for (int i = 0; i < 2; ++i) {
    Task& t = match.players[i].task;
    if (t.kind == TaskKind::kPunch) t.punch_flag = match.world.punches[i].flag;
  }
  for (const PunchEvent& e : events) {
    match.players[e.attacker].score += ScorePunch(e);
  }
  match.frame += 1;
  const int s0 = match.players[0].score;
  const int s1 = match.players[1].score;
  if (s0 >= config.win_score || s1 >= config.win_score) {
    match.phase = MatchPhase::kFinished;
    match.winner = s0 > s1 ? 0 : s1 > s0 ? 1 : -1;
  }
  return events;
}

HudState MakeHud(const CharacterModel& model, const MatchState& match,
                 const std::vector<PunchEvent>& events) {
  HudState hud;
  for (int i = 0; i < 2; ++i) {
    hud.parts[i].assign(model.num_bones(), Highlight::kNone);
  }
  for (int i = 0; i < 2; ++i) {
    const Task& t = match.players[i].task;
    if (t.kind == TaskKind::kPunch) {
      hud.parts[i][model.hand_bone(t.hand)] = Highlight::kGreen;
      hud.parts[1 - i][model.target_bone(t.punch_target)] = Highlight::kGreen;
    } else if (t.kind == TaskKind::kMove) {
      GuideLine& g = hud.guides[i];
      g.active = true;
      g.hand = t.hand;
      g.from = HandPosition(model, match.world.characters[i], t.hand);
      g.to = t.move_target;
    }
  }
  for (const PunchEvent& e : events) {
    hud.parts[1 - e.attacker][model.target_bone(e.target)] = Highlight::kRed;
  }
  return hud;
}

TickResult Tick(const CharacterModel& model, MatchState& match,
                const std::vector<Command>& commands, const Config& config) {
  if (match.phase != MatchPhase::kRunning) {
    throw GameError("match is not running");
  }
  for (const Command& c : commands) ApplyCommand(model, match, c, config);
  UpdateTasks(model, match, config);
  TickResult out;
  for (int i = 0; i < 2; ++i) {
    out.plans[i] = PlanPlayer(model, match, i, config);
    out.actions[i] = out.plans[i].first_action;
  }
  for (int i = 0; i < 2; ++i) {
    match.players[i].last_best = out.plans[i].best_spline;
    match.players[i].cma = out.plans[i].cma;
  }
  out.events = Advance(model, match, out.actions, config);
  out.hud = MakeHud(model, match, out.events);
  return out;
}

}  // namespace midctl
