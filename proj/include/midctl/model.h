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

#ifndef MIDCTL_MODEL_H_
#define MIDCTL_MODEL_H_

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "midctl/spline.h"

namespace midctl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
  // z x v for a unit out-of-plane axis
  Vec2 perp() const { return {-y, x}; }
  bool operator==(const Vec2&) const = default;
};

enum class BoneRole { kTorso, kHead, kUpperArm, kForeArm, kHand };
enum class Side { kLeft = 0, kRight = 1 };
enum class BodyTarget { kHead = 0, kChest = 1 };

const char* ToString(BoneRole role);
const char* ToString(Side side);
const char* ToString(BodyTarget target);

struct JointSpec {
  bool actuated = true;      // hinge DOF; otherwise welded at fixed_angle
  double fixed_angle = 0.0;  // rad, welded joints only
  JointLimit limit{-3.14, 3.14};
  double reference = 0.0;    // rad, reference (guard) pose
  double kp = 60.0;          // N m / rad
  double kd = 6.0;           // N m s / rad
  double torque_limit = 30.0;  // N m
  double damping = 0.0;      // passive, N m s / rad
};

// A rigid segment hanging off its parent at `attach` (fraction of the
// parent's length; the root attaches at the pelvis point). The segment
// points along its absolute angle; mass is a uniform rod.
struct BoneSpec {
  std::string name;
  BoneRole role = BoneRole::kTorso;
  Side side = Side::kLeft;
  int parent = -1;
  double attach = 1.0;
  double length = 0.1;       // m
  double mass = 1.0;         // kg
  double radius = 0.05;      // collision disc, m
  double disc_offset = 0.5;  // disc centre as fraction of length
  JointSpec joint;
};

inline constexpr int kMaxDof = 16;
inline constexpr int kMaxBones = 24;

// Planar articulated character. Joint angles are relative to the parent
// bone; angles are measured in the character's local frame (facing +x).
class CharacterModel {
 public:
  CharacterModel() = default;
  // throws ConfigError on malformed trees, sizes, or reference poses
  // outside the joint limits
  CharacterModel(std::vector<BoneSpec> bones, double root_height);

  // torso lean, neck, two shoulders, two elbows; welded hands
  static CharacterModel Default();

  const std::vector<BoneSpec>& bones() const { return bones_; }
  int num_bones() const { return static_cast<int>(bones_.size()); }
  int dof() const { return dof_; }
  double root_height() const { return root_height_; }

  // DOF index of a bone's joint, -1 when welded
  int dof_of_bone(int bone) const { return dof_of_bone_[bone]; }
  int bone_of_dof(int d) const { return bone_of_dof_[d]; }
  // DOFs on the path root..bone inclusive, root first
  const std::vector<int>& chain(int bone) const { return chain_[bone]; }

  const std::vector<JointLimit>& limits() const { return limits_; }
  const std::vector<double>& reference_pose() const { return reference_; }
  // absolute bone angles at the reference pose (local frame)
  const std::vector<double>& reference_angles() const {
    return reference_angles_;
  }

  int hand_bone(Side side) const { return hand_[static_cast<int>(side)]; }
  int shoulder_bone(Side side) const {
    return shoulder_[static_cast<int>(side)];
  }
  int head_bone() const { return head_; }
  int chest_bone() const { return chest_; }
  int target_bone(BodyTarget t) const {
    return t == BodyTarget::kHead ? head_ : chest_;
  }
  // relax position of each hand's disc relative to the root point (local)
  Vec2 hand_relax_local(Side side) const {
    return hand_relax_[static_cast<int>(side)];
  }
  // total length from shoulder joint to hand disc, for reach clamping
  double arm_reach(Side side) const { return reach_[static_cast<int>(side)]; }

  SplineBounds spline_bounds(double horizon, double knot_spacing) const {
    return SplineBounds{limits_, horizon, knot_spacing};
  }

 private:
  std::vector<BoneSpec> bones_;
  double root_height_ = 1.0;
  int dof_ = 0;
  std::vector<int> dof_of_bone_;
  std::vector<int> bone_of_dof_;
  std::vector<std::vector<int>> chain_;
  std::vector<JointLimit> limits_;
  std::vector<double> reference_;
  std::vector<double> reference_angles_;
  std::array<int, 2> hand_{-1, -1};
  std::array<int, 2> shoulder_{-1, -1};
  int head_ = -1;
  int chest_ = -1;
  std::array<Vec2, 2> hand_relax_{};
  std::array<double, 2> reach_{0.0, 0.0};
};

}  // namespace midctl

#endif  // MIDCTL_MODEL_H_
