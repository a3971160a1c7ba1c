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

#ifndef MIDCTL_CONTROL_H_
#define MIDCTL_CONTROL_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "midctl/cmaes.h"
#include "midctl/config.h"
#include "midctl/model.h"
#include "midctl/sim.h"
#include "midctl/spline.h"

namespace midctl {

enum class TaskKind : uint8_t { kNull = 0, kMove = 1, kPunch = 2 };

const char* ToString(TaskKind kind);

// A character's middle-level command. Operand fields are meaningful only for
// the kinds that use them.
struct Task {
  TaskKind kind = TaskKind::kNull;
  Side hand = Side::kRight;
  Vec2 move_target;                        // Move, world frame, m
  BodyTarget punch_target = BodyTarget::kHead;  // Punch
  double started_at = 0.0;                 // s
  PunchFlag punch_flag = PunchFlag::kNotHappened;  // Punch

  static Task Null(double now) { return Task{TaskKind::kNull, Side::kRight, {}, BodyTarget::kHead, now, PunchFlag::kNotHappened}; }
  static Task Move(Side hand, Vec2 target, double now) { return Task{TaskKind::kMove, hand, target, BodyTarget::kHead, now, PunchFlag::kNotHappened}; }
  static Task Punch(Side hand, BodyTarget target, double now) { return Task{TaskKind::kPunch, hand, {}, target, now, PunchFlag::kNotHappened}; }

  double age(double clock) const { return clock - started_at; }
  bool operator==(const Task&) const = default;
};

// the punch slot a task implies for the simulator
PunchSlot SlotFor(const Task& task);

struct PlanningContext {
  const CharacterModel* model = nullptr;
  WorldState world;
  int self = 0;
  Task task;
  std::optional<ControlSpline> opponent_spline;  // absent: opponent holds pose
  std::optional<ControlSpline> last_best;
  std::optional<CmaState> cma;                   // absent: fresh distribution
  uint64_t seed = 0;
  int64_t frame = 0;
};

struct PlanResult {
  ControlSpline best_spline;
  double best_fitness = 0.0;
  std::vector<double> first_action;
  CmaState cma;
  int rollouts = 0;
  int64_t world_steps = 0;
};

// --- state costs -----------------------------------------------------------

// sum over actuated bones of (angle to reference / sigma_pose)^2, degrees
double CostPose(const CharacterModel& model, const WorldState& world, int self,
                const Config& config);
// (|hand - target| / sigma_move)^2; zero unless the task is Move
double CostMove(const CharacterModel& model, const WorldState& world, int self,
                const Task& task, const Config& config);
// Three-phase punch cost keyed by the world's punch flag for `self`:
// windup velocity error, minus PunchPower at impact, then distance to the
// relax position. Zero unless the task is Punch.
double CostPunch(const CharacterModel& model, const WorldState& world,
                 int self, const Task& task, const Config& config);
// -(pose + move + punch) * cost_scale
double StateFitness(const CharacterModel& model, const WorldState& world,
                    int self, const Task& task, const Config& config);

// hand disc centre of `side`, world frame
Vec2 HandPosition(const CharacterModel& model, const CharacterState& state,
                  Side side);
// where the hand rests in the reference pose at the current root position
Vec2 HandRelaxPosition(const CharacterModel& model,
                       const CharacterState& state, Side side);

// --- planning --------------------------------------------------------------

ControlSpline DefaultPoseSpline(const CharacterModel& model,
                                const Config& config);
CmaState FreshCma(const CharacterModel& model, const Config& config);

std::vector<SeedSpec> SeedPopulation(const PlanningContext& ctx,
                                     const Config& config);

// Mean state fitness over the rollout horizon; -inf on divergence.
double RolloutFitness(const PlanningContext& ctx,
                      const ControlSpline& candidate, const Config& config);

// One frame of rolling-horizon CMA-ES: cma_updates ask/evaluate/tell rounds.
PlanResult Plan(const PlanningContext& ctx, const Config& config);

}  // namespace midctl

#endif  // MIDCTL_CONTROL_H_
