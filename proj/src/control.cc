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
#include <limits>
#include <numbers>

namespace midctl {

const char* ToString(TaskKind kind) {
  switch (kind) {
    case TaskKind::kNull: return "null";
    case TaskKind::kMove: return "move";
    case TaskKind::kPunch: return "punch";
  }
  return "?";
}

PunchSlot SlotFor(const Task& task) {
  PunchSlot slot;
  if (task.kind != TaskKind::kPunch) return slot;
  slot.active = true;
  slot.hand = task.hand;
  slot.target = task.punch_target;
  slot.flag = task.punch_flag;
  return slot;
}

Vec2 HandPosition(const CharacterModel& model, const CharacterState& state,
                  Side side) {
  return ForwardKinematics(model, state).disc[model.hand_bone(side)];
}

Vec2 HandRelaxPosition(const CharacterModel& model,
                       const CharacterState& state, Side side) {
  const Vec2 local = model.hand_relax_local(side);
  return {state.root_x + state.facing * local.x, model.root_height() + local.y};
}

double CostPose(const CharacterModel& model, const WorldState& world, int self,
                const Config& config) {
  const CharacterState& s = world.characters[self];
  const auto& bones = model.bones();
  const auto& reference = model.reference_angles();
  std::array<double, kMaxBones> angle{};
  const double to_deg = 180.0 / std::numbers::pi;
  double cost = 0.0;
  for (int b = 0; b < model.num_bones(); ++b) {
    const int d = model.dof_of_bone(b);
    const double rel = d >= 0 ? s.q[d] : bones[b].joint.fixed_angle;
    angle[b] = (bones[b].parent >= 0 ? angle[bones[b].parent] : 0.0) + rel;
    if (d < 0) continue;
    const double dev =
        std::abs(WrapToPi(angle[b] - reference[b])) * to_deg /
        config.sigma_pose_deg;
    cost += dev * dev;
  }
  return cost;
}

double CostMove(const CharacterModel& model, const WorldState& world, int self,
                const Task& task, const Config& config) {
  if (task.kind != TaskKind::kMove) return 0.0;
  const Vec2 hand = HandPosition(model, world.characters[self], task.hand);
  const double r = (hand - task.move_target).norm() / config.sigma_move;
  return r * r;
}

double CostPunch(const CharacterModel& model, const WorldState& world,
                 int self, const Task& task, const Config& config) {
  if (task.kind != TaskKind::kPunch) return 0.0;
  const CharacterState& me = world.characters[self];
  const BodyPose pose = ForwardKinematics(model, me);
  const int hand_bone = model.hand_bone(task.hand);
  const Vec2 hand = pose.disc[hand_bone];
  const Vec2 hand_vel = pose.disc_vel[hand_bone];
  switch (world.punches[self].flag) {
    case PunchFlag::kNotHappened: {
      const BodyPose other = ForwardKinematics(model, world.characters[1 - self]);
      const Vec2 to = other.disc[model.target_bone(task.punch_target)] - hand;
      const double dist = to.norm();
      const Vec2 desired = dist > 0 ? to * (config.punch_desired_speed / dist)
                                    : Vec2{};
      const double r = (hand_vel - desired).norm() / config.sigma_hand_velocity;
      return r * r;
    }
    case PunchFlag::kHappenedNow:
      return -PunchPower(hand_vel.norm());
    case PunchFlag::kHappenedBefore: {
      const Vec2 relax = HandRelaxPosition(model, me, task.hand);
      const double r = (hand - relax).norm() / config.sigma_hand_relax;
      return r * r;
    }
  }
  return 0.0;
}

double StateFitness(const CharacterModel& model, const WorldState& world,
                    int self, const Task& task, const Config& config) {
  const double cost = CostPose(model, world, self, config) +
                      CostMove(model, world, self, task, config) +
                      CostPunch(model, world, self, task, config);
  return -cost * config.cost_scale;
}

ControlSpline DefaultPoseSpline(const CharacterModel& model,
                                const Config& config) {
  return ControlSpline::Constant(model.reference_pose(), config.spline_points,
                                 config.horizon);
}

CmaState FreshCma(const CharacterModel& model, const Config& config) {
  const ParamVector mean = Encode(DefaultPoseSpline(model, config));
  return InitCma(static_cast<int>(mean.size()), mean, config.cma_sigma0,
                 config.population);
}

namespace {

Eigen::VectorXd SeedStd(const CharacterModel& model, const Config& config) {
  const int stride = model.dof() + 1;
  Eigen::VectorXd std(config.spline_points * stride);
  for (int i = 0; i < std.size(); ++i) {
    std[i] = i % stride == 0 ? config.seed_time_std_fraction * config.horizon
                             : config.SigmaPoseRad();
  }
  return std;
}

void AddGroup(std::vector<SeedSpec>& out, const ParamVector& mean,
              const Eigen::VectorXd& std, int count, CandidateOrigin origin,
              const Config& config) {
  for (int i = 0; i < count; ++i) {
    const bool exact = config.seed_exact_mean && i == 0;
    out.push_back(SeedSpec{mean, exact ? Eigen::VectorXd::Zero(std.size()) : std,
                           origin});
  }
}

}  // namespace

std::vector<SeedSpec> SeedPopulation(const PlanningContext& ctx,
                                     const Config& config) {
  const CharacterModel& model = *ctx.model;
  const Eigen::VectorXd std = SeedStd(model, config);
  std::vector<SeedSpec> seeds;
  int default_count =
      config.use_default_pose_seeds ? config.default_pose_seeds : 0;
  if (config.use_last_best_seeds) {
    if (ctx.last_best) {
      const ControlSpline shifted =
          Shift(*ctx.last_best, config.dt,
                model.spline_bounds(config.horizon, config.knot_spacing));
      AddGroup(seeds, Encode(shifted), std, config.last_best_seeds,
               CandidateOrigin::kLastBestSeed, config);
    } else if (config.use_default_pose_seeds) {
      default_count += config.last_best_seeds;
    }
  }
  AddGroup(seeds, Encode(DefaultPoseSpline(model, config)), std, default_count,
           CandidateOrigin::kDefaultPoseSeed, config);
  return seeds;
}

double RolloutFitness(const PlanningContext& ctx,
                      const ControlSpline& candidate, const Config& config) {
  const CharacterModel& model = *ctx.model;
  const int self = ctx.self;
  const int other = 1 - self;
  WorldState world = ctx.world;
  world.punches[self] = SlotFor(ctx.task);
  // Return-phase cost only applies to a punch that already landed for real.
  const bool skip_predicted_return =
      !config.rollout_return_phase &&
      world.punches[self].flag == PunchFlag::kNotHappened;

  const int steps = config.RolloutSteps();
  const int n = model.dof();
  std::array<double, kMaxDof> own{};
  std::array<double, kMaxDof> opp{};
  std::copy(model.reference_pose().begin(), model.reference_pose().end(),
            opp.begin());
  StepInputs inputs;
  inputs.targets[self] = std::span<const double>(own.data(), n);
  inputs.targets[other] = std::span<const double>(opp.data(), n);

  double total = 0.0;
  try {
    for (int k = 1; k <= steps; ++k) {
      const double t = k * config.dt;
      Evaluate(candidate, t, std::span<double>(own.data(), n));
      if (ctx.opponent_spline) {
        Evaluate(*ctx.opponent_spline, std::min(t, config.opponent_horizon),
                 std::span<double>(opp.data(), n));
      }
      StepWorld(model, world, inputs, config);
      if (skip_predicted_return &&
          world.punches[self].flag == PunchFlag::kHappenedBefore) {
        total -= config.cost_scale * (CostPose(model, world, self, config) +
                                      CostMove(model, world, self, ctx.task, config));
      } else {
        total += StateFitness(model, world, self, ctx.task, config);
      }
    }
  } catch (const SimulationDiverged&) {
    return -std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(total)) return -std::numeric_limits<double>::infinity();
  return total / steps;
}

PlanResult Plan(const PlanningContext& ctx, const Config& config) {
  const CharacterModel& model = *ctx.model;
  const SplineBounds bounds =
      model.spline_bounds(config.horizon, config.knot_spacing);
  const int dim = ParamSize(config.spline_points, model.dof());

  PlanResult result;
  result.cma = ctx.cma && ctx.cma->dim == dim && ctx.cma->lambda == config.population
                   ? *ctx.cma
                   : FreshCma(model, config);
  const Eigen::VectorXd seed_std = SeedStd(model, config);
  if (config.shift_cma_mean && result.cma.generation > 0) {
    result.cma.mean = Encode(Shift(
        Decode(result.cma.mean, config.spline_points, bounds), config.dt, bounds));
  }

  bool have_best = false;
  ParamVector best_x;
  for (int update = 0; update < config.cma_updates; ++update) {
    std::vector<SeedSpec> seeds;
    if (update == 0) {
      seeds = SeedPopulation(ctx, config);
    } else if (have_best) {
      seeds.push_back(SeedSpec{
          best_x,
          config.seed_exact_mean ? Eigen::VectorXd::Zero(dim) : seed_std,
          CandidateOrigin::kLastBestSeed});
    }
    const uint64_t stream = MixSeed(
        ctx.seed, static_cast<uint64_t>(ctx.frame * config.cma_updates + update));
    std::vector<Candidate> population = Ask(result.cma, stream, seeds);
    for (Candidate& c : population) {
      const ControlSpline spline = Decode(c.x, config.spline_points, bounds);
      c.fitness = RolloutFitness(ctx, spline, config);
      result.rollouts += 1;
      result.world_steps += config.RolloutSteps();
    }
    const int top = BestIndex(population);
    if (!have_best || population[top].fitness > result.best_fitness) {
      have_best = true;
      best_x = population[top].x;
      result.best_fitness = population[top].fitness;
    }
    result.cma = Tell(result.cma, population);
  }
  result.best_spline = Decode(best_x, config.spline_points, bounds);
  result.first_action = Evaluate(result.best_spline, config.dt);
  for (int d = 0; d < model.dof(); ++d) {
    result.first_action[d] = std::clamp(result.first_action[d],
                                        model.limits()[d].lo,
                                        model.limits()[d].hi);
  }
  return result;
}

}  // namespace midctl
