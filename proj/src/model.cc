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

#include "midctl/model.h"

#include <string>
#include <utility>

#include "midctl/config.h"

namespace midctl {

const char* ToString(BoneRole role) {
  switch (role) {
    case BoneRole::kTorso: return "torso";
    case BoneRole::kHead: return "head";
    case BoneRole::kUpperArm: return "upperArm";
    case BoneRole::kForeArm: return "foreArm";
    case BoneRole::kHand: return "hand";
  }
  return "?";
}

const char* ToString(Side side) {
  return side == Side::kLeft ? "left" : "right";
}

const char* ToString(BodyTarget target) {
  return target == BodyTarget::kHead ? "head" : "chest";
}

CharacterModel::CharacterModel(std::vector<BoneSpec> bones, double root_height)
    : bones_(std::move(bones)), root_height_(root_height) {
  const int nb = num_bones();
  if (nb == 0 || nb > kMaxBones) {
    throw ConfigError("model: bone count must be in [1, " +
                      std::to_string(kMaxBones) + "]");
  }
  dof_of_bone_.assign(nb, -1);
  chain_.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const BoneSpec& bone = bones_[b];
    const std::string where = "model: bone '" + bone.name + "': ";
    if (bone.parent >= b || bone.parent < -1) {
      throw ConfigError(where + "parent must precede the bone");
    }
    if (!(bone.length > 0) || !(bone.mass > 0) || !(bone.radius >= 0)) {
      throw ConfigError(where + "length and mass must be positive");
    }
    if (bone.joint.actuated) {
      const JointSpec& j = bone.joint;
      if (!(j.limit.lo <= j.limit.hi)) {
        throw ConfigError(where + "joint limits are inverted");
      }
      if (j.reference < j.limit.lo || j.reference > j.limit.hi) {
        throw ConfigError(where + "reference angle outside joint limits");
      }
      if (j.kp < 0 || j.kd < 0 || j.torque_limit < 0 || j.damping < 0) {
        throw ConfigError(where + "gains must be non-negative");
      }
      dof_of_bone_[b] = dof_++;
      bone_of_dof_.push_back(b);
      limits_.push_back(j.limit);
      reference_.push_back(j.reference);
    }
    if (bone.parent >= 0) chain_[b] = chain_[bone.parent];
    if (dof_of_bone_[b] >= 0) chain_[b].push_back(dof_of_bone_[b]);

    const int s = static_cast<int>(bone.side);
    switch (bone.role) {
      case BoneRole::kHand: hand_[s] = b; break;
      case BoneRole::kUpperArm: shoulder_[s] = b; break;
      case BoneRole::kHead: head_ = b; break;
      case BoneRole::kTorso:
        if (chest_ < 0) chest_ = b;
        break;
      default: break;
    }
  }
  if (dof_ > kMaxDof) {
    throw ConfigError("model: at most " + std::to_string(kMaxDof) +
                      " actuated joints supported");
  }

  // reference absolute angles and hand relax positions
  reference_angles_.assign(nb, 0.0);
  std::vector<Vec2> joint(nb);
  for (int b = 0; b < nb; ++b) {
    const BoneSpec& bone = bones_[b];
    const double rel =
        bone.joint.actuated ? bone.joint.reference : bone.joint.fixed_angle;
    if (bone.parent < 0) {
      reference_angles_[b] = rel;
    } else {
      const BoneSpec& p = bones_[bone.parent];
      const double pa = reference_angles_[bone.parent];
      reference_angles_[b] = pa + rel;
      joint[b] = joint[bone.parent] +
                 Vec2{std::cos(pa), std::sin(pa)} * (p.length * bone.attach);
    }
  }
  for (int s = 0; s < 2; ++s) {
    const int h = hand_[s];
    if (h < 0) continue;
    const double a = reference_angles_[h];
    hand_relax_[s] = joint[h] + Vec2{std::cos(a), std::sin(a)} *
                                    (bones_[h].length * bones_[h].disc_offset);
    double reach = bones_[h].length * bones_[h].disc_offset;
    int child = h;
    for (int b = bones_[h].parent; b >= 0 && child != shoulder_[s];
         child = b, b = bones_[b].parent) {
      reach += bones_[b].length * bones_[child].attach;
    }
    reach_[s] = reach;
  }
}

CharacterModel CharacterModel::Default() {
  std::vector<BoneSpec> bones;
  auto add = [&](std::string name, BoneRole role, Side side, int parent,
                 double attach, double length, double mass, double radius,
                 double disc_offset, JointSpec joint) {
    bones.push_back(BoneSpec{std::move(name), role, side, parent, attach,
                             length, mass, radius, disc_offset, joint});
    return static_cast<int>(bones.size()) - 1;
  };
  auto hinge = [](double lo, double hi, double ref, double kp, double kd,
                  double limit) {
    JointSpec j;
    j.limit = {lo, hi};
    j.reference = ref;
    j.kp = kp;
    j.kd = kd;
    j.torque_limit = limit;
    return j;
  };
  JointSpec weld;
  weld.actuated = false;

  const int torso = add("torso", BoneRole::kTorso, Side::kLeft, -1, 0.0, 0.55,
                        25.0, 0.13, 0.65, hinge(1.0, 2.0, 1.35, 120, 12, 60));
  add("head", BoneRole::kHead, Side::kLeft, torso, 1.0, 0.22, 5.0, 0.10, 0.5,
      hinge(-0.5, 0.6, 0.12, 60, 6, 30));
  // compact guard: lead (left) hand at chin height, rear hand before the chest
  const int ul = add("upperArm.l", BoneRole::kUpperArm, Side::kLeft, torso,
                     0.9, 0.30, 2.0, 0.05, 0.5,
                     hinge(-3.8, 0.3, -2.19, 150, 10, 60));
  const int fl = add("foreArm.l", BoneRole::kForeArm, Side::kLeft, ul, 1.0,
                     0.28, 1.2, 0.045, 0.5, hinge(0.0, 2.7, 2.44, 150, 10, 60));
  add("hand.l", BoneRole::kHand, Side::kLeft, fl, 1.0, 0.08, 0.4, 0.05, 0.5,
      weld);
  const int ur = add("upperArm.r", BoneRole::kUpperArm, Side::kRight, torso,
                     0.9, 0.30, 2.0, 0.05, 0.5,
                     hinge(-3.8, 0.3, -2.954, 150, 10, 60));
  const int fr = add("foreArm.r", BoneRole::kForeArm, Side::kRight, ur, 1.0,
                     0.28, 1.2, 0.045, 0.5, hinge(0.0, 2.7, 2.65, 150, 10, 60));
  add("hand.r", BoneRole::kHand, Side::kRight, fr, 1.0, 0.08, 0.4, 0.05, 0.5,
      weld);
  return CharacterModel(std::move(bones), 1.0);
}

}  // namespace midctl
