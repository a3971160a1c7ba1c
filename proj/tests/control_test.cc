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


#include "midctl/control.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

namespace midctl {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

int DofNamed(const CharacterModel& m, const std::string& name) {
  for (int b = 0; b < m.num_bones(); ++b) {
    if (m.bones()[b].name == name) return m.dof_of_bone(b);
  }
  return -1;
}

PlanningContext Context(const CharacterModel& m, const WorldState& w,
                        const Task& task) {
  PlanningContext ctx;
  ctx.model = &m;
  ctx.world = w;
  ctx.task = task;
  ctx.seed = 7;
  return ctx;
}

ControlSpline RandomSpline(const CharacterModel& m, const Config& c,
                           std::mt19937_64& rng, double t_lo) {
  std::uniform_real_distribution<double> time(t_lo, c.horizon);
  ControlSpline s;
  for (int k = 0; k < c.spline_points; ++k) {
    ControlPoint p;
    p.time = time(rng);
    for (int d = 0; d < m.dof(); ++d) {
      std::uniform_real_distribution<double> a(m.limits()[d].lo,
                                               m.limits()[d].hi);
      p.targets.push_back(a(rng));
    }
    s.points.push_back(p);
  }
  Canonicalize(s, m.spline_bounds(c.horizon, c.knot_spacing));
  return s;
}

// straight-line rollout used as a second opinion on RolloutFitness
double ReferenceRollout(const PlanningContext& ctx, const ControlSpline& cand,
                        const Config& c) {
  const CharacterModel& m = *ctx.model;
  WorldState w = ctx.world;
  w.punches[ctx.self] = SlotFor(ctx.task);
  std::vector<double> fitness;
  for (int k = 1; k <= 18; ++k) {
    const double t = k * c.dt;
    const std::vector<double> own = Evaluate(cand, t);
    std::vector<double> opp = m.reference_pose();
    if (ctx.opponent_spline) {
      opp = Evaluate(*ctx.opponent_spline, t < c.opponent_horizon ? t : c.opponent_horizon);
    }
    StepInputs in;
    in.targets[ctx.self] = own;
    in.targets[1 - ctx.self] = opp;
    StepWorld(m, w, in, c);
    fitness.push_back(StateFitness(m, w, ctx.self, ctx.task, c));
  }
  double sum = 0.0;
  for (auto it = fitness.rbegin(); it != fitness.rend(); ++it) sum += *it;
  return sum / static_cast<double>(fitness.size());
}

TEST_CASE("pose cost table") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  CHECK(CostPose(m, w, 0, c) == 0.0);
  CHECK(StateFitness(m, w, 0, Task::Null(0), c) == 0.0);

  const int fl = DofNamed(m, "foreArm.l");
  const int fr = DofNamed(m, "foreArm.r");
  w.characters[0].q[fl] -= 20 * kDeg;
  CHECK(CostPose(m, w, 0, c) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(StateFitness(m, w, 0, Task::Null(0), c) ==
        doctest::Approx(-1.0).epsilon(1e-12));

  w = InitialWorld(m, 1.0);
  w.characters[0].q[fl] -= 40 * kDeg;
  w.characters[0].q[fr] -= 40 * kDeg;
  CHECK(CostPose(m, w, 0, c) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("pose cost uses absolute bone angles") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  const int torso = DofNamed(m, "torso");
  w.characters[0].q[torso] -= 20 * kDeg;
  // every actuated bone hangs off the torso
  CHECK(CostPose(m, w, 0, c) == doctest::Approx(m.dof()).epsilon(1e-12));
}

TEST_CASE("move cost table") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  const WorldState w = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kLeft);
  CHECK(CostMove(m, w, 0, Task::Move(Side::kLeft, hand, 0), c) == 0.0);
  CHECK(CostMove(m, w, 0, Task::Move(Side::kLeft, hand + Vec2{0.02, 0}, 0), c) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(CostMove(m, w, 0, Task::Move(Side::kLeft, hand + Vec2{0, -0.06}, 0), c) ==
        doctest::Approx(9.0).epsilon(1e-12));
  CHECK(CostMove(m, w, 0, Task::Null(0), c) == 0.0);
  CHECK(CostPunch(m, w, 0, Task::Move(Side::kLeft, hand, 0), c) == 0.0);
}

TEST_CASE("fitness falls when any single component rises") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kRight);
  const Task near = Task::Move(Side::kRight, hand + Vec2{0.01, 0}, 0);
  const Task far = Task::Move(Side::kRight, hand + Vec2{0.03, 0}, 0);
  CHECK(StateFitness(m, w, 0, far, c) < StateFitness(m, w, 0, near, c));
  const double before = StateFitness(m, w, 0, near, c);
  w.characters[0].q[DofNamed(m, "head")] += 5 * kDeg;
  CHECK(StateFitness(m, w, 0, near, c) < before);
}

TEST_CASE("punch cost phases") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  const Task task = Task::Punch(Side::kLeft, BodyTarget::kHead, 0);

  // at rest the whole desired speed is missing
  w.punches[0] = SlotFor(task);
  const double r = c.punch_desired_speed / c.sigma_hand_velocity;
  CHECK(CostPunch(m, w, 0, task, c) == doctest::Approx(r * r).epsilon(1e-12));

  // impact at 2 m/s
  const int fl = DofNamed(m, "foreArm.l");
  w.characters[0].qdot[fl] = 1.0;
  const double unit =
      ForwardKinematics(m, w.characters[0]).disc_vel[m.hand_bone(Side::kLeft)].norm();
  w.characters[0].qdot[fl] = 2.0 / unit;
  w.punches[0].flag = PunchFlag::kHappenedNow;
  CHECK(CostPunch(m, w, 0, task, c) == doctest::Approx(-2000.0).epsilon(1e-9));
  CHECK(StateFitness(m, w, 0, task, c) == doctest::Approx(2000.0).epsilon(1e-9));

  // return phase: the reference pose is the relax position
  w = InitialWorld(m, 1.0);
  w.punches[0] = SlotFor(task);
  w.punches[0].flag = PunchFlag::kHappenedBefore;
  CHECK(std::abs(CostPunch(m, w, 0, task, c)) < 1e-12);
  w.characters[0].root_x += 0.3;  // relax position travels with the root
  CHECK(std::abs(CostPunch(m, w, 0, task, c)) < 1e-12);
  w.characters[0].q[fl] -= 0.1;
  CHECK(CostPunch(m, w, 0, task, c) > 1.0);
}

TEST_CASE("windup with the desired velocity costs nothing") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  const Task task = Task::Punch(Side::kRight, BodyTarget::kChest, 0);
  w.punches[0] = SlotFor(task);
  const int hand = m.hand_bone(Side::kRight);
  const int sh = DofNamed(m, "upperArm.r");
  const int el = DofNamed(m, "foreArm.r");
  // hand velocity per unit joint rate, one column at a time
  auto column = [&](int d) {
    CharacterState s = w.characters[0];
    s.qdot[d] = 1.0;
    return ForwardKinematics(m, s).disc_vel[hand];
  };
  const Vec2 js = column(sh);
  const Vec2 je = column(el);
  const Vec2 to = ForwardKinematics(m, w.characters[1]).disc[m.chest_bone()] -
                  ForwardKinematics(m, w.characters[0]).disc[hand];
  const Vec2 want = to * (c.punch_desired_speed / to.norm());
  const double det = js.x * je.y - je.x * js.y;
  w.characters[0].qdot[sh] = (want.x * je.y - je.x * want.y) / det;
  w.characters[0].qdot[el] = (js.x * want.y - want.x * js.y) / det;
  CHECK(std::abs(CostPunch(m, w, 0, task, c)) < 1e-20);
  // now moving twice as fast: error equals the desired speed
  w.characters[0].qdot[sh] *= 2;
  w.characters[0].qdot[el] *= 2;
  const double r = c.punch_desired_speed / c.sigma_hand_velocity;
  CHECK(CostPunch(m, w, 0, task, c) == doctest::Approx(r * r).epsilon(1e-9));
}

TEST_CASE("seed population without a last best") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  const PlanningContext ctx = Context(m, InitialWorld(m, 1.0), Task::Null(0));
  const auto seeds = SeedPopulation(ctx, c);
  REQUIRE(seeds.size() == 6);
  const ParamVector def = Encode(DefaultPoseSpline(m, c));
  for (const SeedSpec& s : seeds) {
    CHECK(s.origin == CandidateOrigin::kDefaultPoseSeed);
    CHECK(s.mean == def);
  }
  CHECK(seeds[0].std.isZero());
  CHECK(seeds[1].std[0] == doctest::Approx(0.1 * c.horizon));
  CHECK(seeds[1].std[1] == doctest::Approx(20 * kDeg));

  const ControlSpline d = DefaultPoseSpline(m, c);
  REQUIRE(d.points.size() == 3);
  CHECK(d.points[0].time == 0.0);
  CHECK(d.points[1].time == doctest::Approx(c.horizon / 2));
  CHECK(d.points[2].time == doctest::Approx(c.horizon));
}

TEST_CASE("seed population with a last best is shifted by one frame") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  std::mt19937_64 rng(3);
  PlanningContext ctx = Context(m, InitialWorld(m, 1.0), Task::Null(0));
  const ControlSpline last = RandomSpline(m, c, rng, c.dt);
  ctx.last_best = last;
  const auto seeds = SeedPopulation(ctx, c);
  REQUIRE(seeds.size() == 6);
  for (int i = 0; i < 3; ++i) CHECK(seeds[i].origin == CandidateOrigin::kLastBestSeed);
  for (int i = 3; i < 6; ++i) CHECK(seeds[i].origin == CandidateOrigin::kDefaultPoseSeed);
  CHECK(seeds[0].std.isZero());
  CHECK(seeds[3].std.isZero());

  const SplineBounds b = m.spline_bounds(c.horizon, c.knot_spacing);
  const ControlSpline shifted = Decode(seeds[0].mean, c.spline_points, b);
  for (double t = 0.0; t <= c.horizon - c.dt; t += 0.01) {
    const auto now = Evaluate(shifted, t);
    const auto then = Evaluate(last, t + c.dt);
    for (int d = 0; d < m.dof(); ++d) CHECK(now[d] == doctest::Approx(then[d]).epsilon(1e-9));
  }
}

TEST_CASE("seed switches") {
  const CharacterModel m = CharacterModel::Default();
  Config c;
  PlanningContext ctx = Context(m, InitialWorld(m, 1.0), Task::Null(0));
  ctx.last_best = DefaultPoseSpline(m, c);
  c.use_default_pose_seeds = false;
  CHECK(SeedPopulation(ctx, c).size() == 3);
  c.use_last_best_seeds = false;
  CHECK(SeedPopulation(ctx, c).empty());
  c.use_default_pose_seeds = true;
  CHECK(SeedPopulation(ctx, c).size() == 3);
}

TEST_CASE("rollout matches a separately written loop") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  std::mt19937_64 rng(11);
  const WorldState w = InitialWorld(m, 0.9);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kLeft);
  for (int i = 0; i < 8; ++i) {
    PlanningContext ctx =
        Context(m, w, Task::Move(Side::kLeft, hand + Vec2{0.15, 0.05}, 0));
    ctx.self = i % 2;
    if (i % 4 < 2) ctx.opponent_spline = RandomSpline(m, c, rng, 0.0);
    const ControlSpline cand = RandomSpline(m, c, rng, 0.0);
    CHECK(RolloutFitness(ctx, cand, c) ==
          doctest::Approx(ReferenceRollout(ctx, cand, c)).epsilon(1e-9));
  }
}

TEST_CASE("hold spline in a still world scores zero") {
  const CharacterModel m = CharacterModel::Default();
  Config c;
  c.gravity = 0.0;
  const PlanningContext ctx = Context(m, InitialWorld(m, 1.2), Task::Null(0));
  CHECK(RolloutFitness(ctx, DefaultPoseSpline(m, c), c) == 0.0);
}

TEST_CASE("opponent targets freeze after the opponent horizon") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  std::mt19937_64 rng(5);
  PlanningContext ctx = Context(m, InitialWorld(m, 0.9), Task::Null(0));
  const ControlSpline cand = RandomSpline(m, c, rng, 0.0);
  std::vector<double> x = m.reference_pose();
  x[DofNamed(m, "upperArm.l")] += 0.3;
  std::vector<double> y = m.reference_pose();
  y[DofNamed(m, "torso")] -= 0.3;
  y[DofNamed(m, "foreArm.r")] -= 0.5;
  // identical (constant) up to the cutoff, wildly different afterwards
  const ControlSpline still = ControlSpline::Constant(x, 3, c.horizon);
  ControlSpline late;
  late.points = {{0.0, x}, {c.opponent_horizon, x}, {c.opponent_horizon + 0.1, x},
                 {c.horizon, y}};
  ctx.opponent_spline = still;
  const double a = RolloutFitness(ctx, cand, c);
  ctx.opponent_spline = late;
  const double b = RolloutFitness(ctx, cand, c);
  CHECK(a == b);
  ctx.opponent_spline.reset();
  CHECK(RolloutFitness(ctx, cand, c) != a);
}

TEST_CASE("divergent rollouts rank last") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  WorldState w = InitialWorld(m, 1.0);
  w.characters[0].qdot[0] = std::nan("");
  const PlanningContext ctx = Context(m, w, Task::Null(0));
  CHECK(RolloutFitness(ctx, DefaultPoseSpline(m, c), c) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("plan budget and first action") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  const PlanningContext ctx = Context(m, InitialWorld(m, 1.0), Task::Null(0));
  const PlanResult r = Plan(ctx, c);
  CHECK(r.rollouts == 64);
  CHECK(r.world_steps == 1152);
  REQUIRE(r.first_action.size() == static_cast<size_t>(m.dof()));
  for (int d = 0; d < m.dof(); ++d) {
    CHECK(r.first_action[d] >= m.limits()[d].lo);
    CHECK(r.first_action[d] <= m.limits()[d].hi);
  }
  CHECK(r.cma.generation == 4);
  CHECK(r.best_fitness == doctest::Approx(RolloutFitness(ctx, r.best_spline, c)));
}

TEST_CASE("plan is deterministic for a fixed seed") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  const WorldState w = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kRight);
  PlanningContext ctx = Context(m, w, Task::Move(Side::kRight, hand + Vec2{0.1, 0.1}, 0));
  const PlanResult a = Plan(ctx, c);
  const PlanResult b = Plan(ctx, c);
  CHECK(a.best_spline == b.best_spline);
  CHECK(a.first_action == b.first_action);
  ctx.seed = 8;
  CHECK_FALSE(Plan(ctx, c).best_spline == a.best_spline);
}

TEST_CASE("plan is at least as good as holding when the target is the hand") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  const WorldState w = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kLeft);
  const PlanningContext ctx = Context(m, w, Task::Move(Side::kLeft, hand, 0));
  const PlanResult r = Plan(ctx, c);
  CHECK(r.best_fitness >= RolloutFitness(ctx, DefaultPoseSpline(m, c), c));
}

TEST_CASE("exact last-best seed bounds the frame best from below") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  std::mt19937_64 rng(21);
  const WorldState w = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kLeft);
  for (int i = 0; i < 3; ++i) {
    PlanningContext ctx = Context(m, w, Task::Move(Side::kLeft, hand + Vec2{0.1, 0}, 0));
    ctx.seed = 100 + i;
    ctx.last_best = RandomSpline(m, c, rng, c.dt);
    const ControlSpline shifted =
        Shift(*ctx.last_best, c.dt, m.spline_bounds(c.horizon, c.knot_spacing));
    const PlanResult r = Plan(ctx, c);
    CHECK(r.best_fitness >= RolloutFitness(ctx, shifted, c));
  }
}

TEST_CASE("a common cost scale leaves the chosen candidate unchanged") {
  const CharacterModel m = CharacterModel::Default();
  Config c;
  const WorldState w = InitialWorld(m, 0.9);
  const Vec2 hand = HandPosition(m, w.characters[0], Side::kLeft);
  for (const Task& task : {Task::Move(Side::kLeft, hand + Vec2{0.12, -0.04}, 0),
                           Task::Punch(Side::kRight, BodyTarget::kHead, 0)}) {
    const PlanningContext ctx = Context(m, w, task);
    const PlanResult a = Plan(ctx, c);
    Config scaled = c;
    scaled.cost_scale = 3.5;
    const PlanResult b = Plan(ctx, scaled);
    CHECK(a.best_spline == b.best_spline);
    CHECK(b.best_fitness == doctest::Approx(3.5 * a.best_fitness).epsilon(1e-9));
  }
}

TEST_CASE("tell does not depend on evaluation order") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  const WorldState w = InitialWorld(m, 1.0);
  const PlanningContext ctx = Context(m, w, Task::Punch(Side::kLeft, BodyTarget::kChest, 0));
  const CmaState cma = FreshCma(m, c);
  std::vector<Candidate> pop = Ask(cma, 42, SeedPopulation(ctx, c));
  const SplineBounds b = m.spline_bounds(c.horizon, c.knot_spacing);
  for (int i = static_cast<int>(pop.size()) - 1; i >= 0; --i) {
    pop[i].fitness = RolloutFitness(ctx, Decode(pop[i].x, c.spline_points, b), c);
  }
  std::vector<Candidate> shuffled = pop;
  std::mt19937_64 rng(9);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const CmaState x = Tell(cma, pop);
  const CmaState y = Tell(cma, shuffled);
  CHECK(x.mean == y.mean);
  CHECK(x.cov == y.cov);
  CHECK(x.sigma == y.sigma);
}

TEST_CASE("carried-over mean moves with the frame") {
  const CharacterModel m = CharacterModel::Default();
  Config c;
  const WorldState w = InitialWorld(m, 1.0);
  PlanningContext ctx = Context(m, w, Task::Null(0));
  const PlanResult first = Plan(ctx, c);
  ctx.cma = first.cma;
  ctx.frame = 1;
  c.cma_updates = 1;
  c.use_last_best_seeds = false;
  c.use_default_pose_seeds = false;
  // with no seeds, the first update samples around the shifted mean
  const SplineBounds b = m.spline_bounds(c.horizon, c.knot_spacing);
  const ParamVector expect =
      Encode(Shift(Decode(first.cma.mean, c.spline_points, b), c.dt, b));
  CmaState moved = first.cma;
  moved.mean = expect;
  const auto pop_a = Ask(moved, MixSeed(ctx.seed, 1 * 1 + 0), {});
  const PlanResult second = Plan(ctx, c);
  double best = -std::numeric_limits<double>::infinity();
  for (const Candidate& cand : pop_a) {
    best = std::max(best, RolloutFitness(ctx, Decode(cand.x, c.spline_points, b), c));
  }
  CHECK(second.best_fitness == best);
}

}  // namespace
}  // namespace midctl
