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

#ifndef MIDCTL_SIM_H_
#define MIDCTL_SIM_H_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "midctl/config.h"
#include "midctl/model.h"

namespace midctl {

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CharacterState {
  double root_x = 0.0;    // m
  double root_vx = 0.0;   // m/s, kinematic command
  std::vector<double> q;     // rad
  std::vector<double> qdot;  // rad/s
  int facing = 1;            // +1 faces +x, -1 faces -x

  bool operator==(const CharacterState&) const = default;
};

enum class PunchFlag : uint8_t { kNotHappened = 0, kHappenedNow = 1, kHappenedBefore = 2 };

// The active punch of one character, if any. The flag only moves forward.
struct PunchSlot {
  bool active = false;
  Side hand = Side::kRight;
  BodyTarget target = BodyTarget::kHead;
  PunchFlag flag = PunchFlag::kNotHappened;

  bool operator==(const PunchSlot&) const = default;
};

struct WorldState {
  std::array<CharacterState, 2> characters;
  double clock = 0.0;
  std::array<PunchSlot, 2> punches;

  bool operator==(const WorldState&) const = default;
};

struct PunchEvent {
  int attacker = 0;
  Side hand = Side::kRight;
  BodyTarget target = BodyTarget::kHead;
  double relative_speed = 0.0;  // m/s, approach speed along the contact normal
  double power = 1000.0;        // in [1000, 3000]
};

struct ContactPair {
  int bone0 = 0;  // bone of character 0
  int bone1 = 0;  // bone of character 1
  double depth = 0.0;
  Vec2 normal;    // unit, from character 0's disc towards character 1's
  double approach_speed = 0.0;
};

// Force exerted on each body of a contact pair during one substep.
struct ContactForce {
  int bone0 = 0;
  int bone1 = 0;
  Vec2 on0;
  Vec2 on1;
};

// World-frame pose of every bone.
struct BodyPose {
  int num_bones = 0;
  std::array<double, kMaxBones> angle{};
  std::array<double, kMaxBones> omega{};
  std::array<Vec2, kMaxBones> joint{};
  std::array<Vec2, kMaxBones> com{};
  std::array<Vec2, kMaxBones> disc{};
  std::array<Vec2, kMaxBones> com_vel{};
  std::array<Vec2, kMaxBones> disc_vel{};
  std::array<Vec2, kMaxBones> tip{};
};

// Maps hand impact speed to [1000, 3000]: clamp(1000 v, 1000, 3000).
double PunchPower(double speed);

// state at the reference pose, at rest
CharacterState RestState(const CharacterModel& model, double root_x,
                         int facing);
// two characters facing each other, roots `separation` apart around x = 0
WorldState InitialWorld(const CharacterModel& model, double separation);

BodyPose ForwardKinematics(const CharacterModel& model,
                           const CharacterState& state);

double WrapToPi(double angle);

// clamp(kp * wrap(target - q) - kd * qdot, +-limit)
double PdTorque(double q, double qdot, double target, double kp, double kd,
                double torque_limit);

struct ContactReport {
  std::vector<ContactPair> pairs;
  std::vector<PunchEvent> events;
};

ContactReport DetectContacts(const CharacterModel& model,
                             const WorldState& world, const Config& config);

// Joint-angle targets for each character; an empty span leaves that
// character unactuated.
struct StepInputs {
  std::array<std::span<const double>, 2> targets;
};

// Advances one frame of config.dt with config.substeps semi-implicit Euler
// substeps. Mutates `world` in place; throws SimulationDiverged on a
// non-finite state. `contact_log`, when set, receives every contact force.
std::vector<PunchEvent> StepWorld(const CharacterModel& model,
                                  WorldState& world, const StepInputs& inputs,
                                  const Config& config,
                                  std::vector<ContactForce>* contact_log = nullptr);

struct StepResult {
  WorldState world;
  std::vector<PunchEvent> events;
};
StepResult StepWorldCopy(const CharacterModel& model, const WorldState& world,
                         const StepInputs& inputs, const Config& config);

// kinetic plus gravitational potential (y measured from 0) energy
double TotalEnergy(const CharacterModel& model, const WorldState& world,
                   double gravity);
double CharacterEnergy(const CharacterModel& model,
                       const CharacterState& state, double gravity);

}  // namespace midctl

#endif  // MIDCTL_SIM_H_
