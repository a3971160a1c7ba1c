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

#include "midctl/sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace midctl {
namespace {

// Kinematics in the character's local frame: origin at the root point,
// facing +x. Positions and velocities are filled by separate passes.
struct LocalFrame {
  std::array<double, kMaxBones> angle;
  std::array<double, kMaxBones> omega;
  std::array<Vec2, kMaxBones> joint;
  std::array<Vec2, kMaxBones> com;
  std::array<Vec2, kMaxBones> disc;
  std::array<Vec2, kMaxBones> v_joint;
  std::array<Vec2, kMaxBones> v_com;
  std::array<Vec2, kMaxBones> v_disc;
};

using DofMatrix = std::array<std::array<double, kMaxDof>, kMaxDof>;
using DofVector = std::array<double, kMaxDof>;

void ComputePositions(const CharacterModel& model, const CharacterState& s,
                      LocalFrame& f) {
  const auto& bones = model.bones();
  const int nb = model.num_bones();
  for (int b = 0; b < nb; ++b) {
    const BoneSpec& bone = bones[b];
    const int d = model.dof_of_bone(b);
    const double rel = d >= 0 ? s.q[d] : bone.joint.fixed_angle;
    if (bone.parent < 0) {
      f.angle[b] = rel;
      f.joint[b] = {0.0, 0.0};
    } else {
      const int p = bone.parent;
      const double pa = f.angle[p];
      f.angle[b] = pa + rel;
      f.joint[b] = f.joint[p] + Vec2{std::cos(pa), std::sin(pa)} *
                                    (bones[p].length * bone.attach);
    }
    const Vec2 dir{std::cos(f.angle[b]), std::sin(f.angle[b])};
    f.com[b] = f.joint[b] + dir * (0.5 * bone.length);
    f.disc[b] = f.joint[b] + dir * (bone.disc_offset * bone.length);
  }
}

void ComputeVelocities(const CharacterModel& model, const CharacterState& s,
                       LocalFrame& f) {
  const auto& bones = model.bones();
  const int nb = model.num_bones();
  for (int b = 0; b < nb; ++b) {
    const BoneSpec& bone = bones[b];
    const int d = model.dof_of_bone(b);
    const double rate = d >= 0 ? s.qdot[d] : 0.0;
    if (bone.parent < 0) {
      f.omega[b] = rate;
      f.v_joint[b] = {0.0, 0.0};
    } else {
      const int p = bone.parent;
      f.omega[b] = f.omega[p] + rate;
      f.v_joint[b] = f.v_joint[p] + (f.joint[b] - f.joint[p]).perp() * f.omega[p];
    }
    const double w = f.omega[b];
    f.v_com[b] = f.v_joint[b] + (f.com[b] - f.joint[b]).perp() * w;
    f.v_disc[b] = f.v_joint[b] + (f.disc[b] - f.joint[b]).perp() * w;
  }
}

void ComputeLocal(const CharacterModel& model, const CharacterState& s,
                  LocalFrame& f) {
  ComputePositions(model, s, f);
  ComputeVelocities(model, s, f);
}

Vec2 ToWorldPoint(const CharacterModel& model, const CharacterState& s,
                  Vec2 p) {
  return {s.root_x + s.facing * p.x, model.root_height() + p.y};
}

Vec2 ToWorldVelocity(const CharacterState& s, Vec2 v) {
  return {s.root_vx + s.facing * v.x, v.y};
}

// world-frame force to local frame (mirror for facing -1)
Vec2 ToLocalVector(const CharacterState& s, Vec2 v) {
  return {s.facing * v.x, v.y};
}

bool Finite(const CharacterState& s) {
  if (!std::isfinite(s.root_x) || !std::isfinite(s.root_vx)) return false;
  for (double v : s.q) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : s.qdot) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Joint-space mass matrix from the current positions, Cholesky-factored in
// place (lower triangle). Throws when not positive definite.
void FactorMass(const CharacterModel& model, const LocalFrame& f,
                DofMatrix& l) {
  const int n = model.dof();
  const auto& bones = model.bones();
  for (int i = 0; i < n; ++i) std::fill_n(l[i].begin(), n, 0.0);
  std::array<Vec2, kMaxDof> jac;
  for (int b = 0; b < model.num_bones(); ++b) {
    const BoneSpec& bone = bones[b];
    const std::vector<int>& chain = model.chain(b);
    const int m = static_cast<int>(chain.size());
    const double inertia = bone.mass * bone.length * bone.length / 12.0;
    for (int i = 0; i < m; ++i) {
      jac[i] = (f.com[b] - f.joint[model.bone_of_dof(chain[i])]).perp();
      // chains are ordered root first, so chain[k] < chain[i] for k < i
      for (int k = 0; k <= i; ++k) {
        l[chain[i]][chain[k]] += bone.mass * jac[i].dot(jac[k]) + inertia;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    double d = l[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0)) {
      throw SimulationDiverged("simulation diverged: singular mass matrix");
    }
    d = std::sqrt(d);
    l[j][j] = d;
    for (int i = j + 1; i < n; ++i) {
      double v = l[i][j];
      for (int k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = v / d;
    }
  }
}

void SolveFactored(const DofMatrix& l, int n, const DofVector& b,
                   DofVector& x) {
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= l[i][k] * x[k];
    x[i] = v / l[i][i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = x[i];
    for (int k = i + 1; k < n; ++k) v -= l[k][i] * x[k];
    x[i] = v / l[i][i];
  }
}

// p = M q, using the factor M = L L^T
void MultiplyFactored(const DofMatrix& l, int n, const DofVector& q,
                      DofVector& p) {
  DofVector t{};
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int k = i; k < n; ++k) v += l[k][i] * q[k];
    t[i] = v;
  }
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int k = 0; k <= i; ++k) v += l[i][k] * t[k];
    p[i] = v;
  }
}

// Generalized force driving the momentum: actuation, passive damping,
// gravity (cancelled for actuated characters when compensated), external disc forces, and dT/dq of the kinetic energy.
void GeneralizedForce(const CharacterModel& model, const CharacterState& s,
                      const LocalFrame& f, std::span<const double> targets,
                      std::span<const Vec2> force, const Config& config,
                      DofVector& out) {
  const int n = model.dof();
  const auto& bones = model.bones();
  for (int d = 0; d < n; ++d) {
    const JointSpec& j = bones[model.bone_of_dof(d)].joint;
    double tau = -j.damping * s.qdot[d];
    if (!targets.empty()) {
      const double target = std::clamp(targets[d], j.limit.lo, j.limit.hi);
      tau += PdTorque(s.q[d], s.qdot[d], target, j.kp, j.kd, j.torque_limit);
    }
    out[d] = tau;
  }
  // actuated characters get exact gravity feedforward, i.e. no net gravity
  const bool gravity = targets.empty() || !config.gravity_compensation;
  std::array<Vec2, kMaxDof> arm;  // com - pivot of each chain joint
  for (int b = 0; b < model.num_bones(); ++b) {
    const BoneSpec& bone = bones[b];
    const std::vector<int>& chain = model.chain(b);
    const int m = static_cast<int>(chain.size());
    if (m == 0) continue;
    const Vec2 ext = ToLocalVector(s, force[b]);
    const bool has_ext = ext.x != 0.0 || ext.y != 0.0;
    for (int i = 0; i < m; ++i) {
      arm[i] = f.com[b] - f.joint[model.bone_of_dof(chain[i])];
    }
    // d(v_com)/dq_i = -sum_j qdot_j (com - pivot_{later of i, j})
    Vec2 tail{};  // sum over j > i of qdot_j * arm_j, built backwards
    std::array<double, kMaxDof> qdot_prefix{};
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      acc += s.qdot[chain[i]];
      qdot_prefix[i] = acc;
    }
    for (int i = m - 1; i >= 0; --i) {
      const int di = chain[i];
      const Vec2 dv = (arm[i] * qdot_prefix[i] + tail) * -1.0;
      double g = bone.mass * f.v_com[b].dot(dv);
      if (gravity) {
        g += arm[i].perp().dot(Vec2{0.0, -bone.mass * config.gravity});
      }
      if (has_ext) {
        g += (f.disc[b] - f.joint[model.bone_of_dof(di)]).perp().dot(ext);
      }
      out[di] += g;
      tail += arm[i] * s.qdot[di];
    }
  }
}

struct PairForce {
  bool overlap = false;
  ContactPair pair;
  double force = 0.0;  // along normal, pushing the discs apart
};

PairForce Touch(Vec2 c0, Vec2 v0, double r0, Vec2 c1, Vec2 v1, double r1,
                const Config& config) {
  PairForce out;
  const Vec2 d = c1 - c0;
  const double r = r0 + r1;
  const double dist2 = d.dot(d);
  if (dist2 >= r * r) return out;
  const double dist = std::sqrt(dist2);
  out.overlap = true;
  out.pair.depth = r - dist;
  out.pair.normal = dist > 0 ? d * (1.0 / dist) : Vec2{1.0, 0.0};
  out.pair.approach_speed = -(v1 - v0).dot(out.pair.normal);
  out.force = std::max(0.0, config.contact_stiffness * out.pair.depth +
                                config.contact_damping *
                                    out.pair.approach_speed);
  return out;
}

struct WorldDiscs {
  int n = 0;
  std::array<Vec2, kMaxBones> pos;
  std::array<Vec2, kMaxBones> vel;
};

void ToWorldDiscs(const CharacterModel& model, const CharacterState& s,
                  const LocalFrame& f, WorldDiscs& out) {
  out.n = model.num_bones();
  for (int b = 0; b < out.n; ++b) {
    out.pos[b] = ToWorldPoint(model, s, f.disc[b]);
    out.vel[b] = ToWorldVelocity(s, f.v_disc[b]);
  }
}

// A punch lands when the tasked hand overlaps the target disc while
// approaching it at least at punch_min_speed.
bool PunchLands(const CharacterModel& model, const PunchSlot& slot,
                const WorldDiscs& self, const WorldDiscs& other,
                const Config& config, double* speed) {
  if (!slot.active || slot.flag != PunchFlag::kNotHappened) return false;
  const int hand = model.hand_bone(slot.hand);
  const int target = model.target_bone(slot.target);
  if (hand < 0 || target < 0) return false;
  const Vec2 d = other.pos[target] - self.pos[hand];
  const double r = model.bones()[hand].radius + model.bones()[target].radius;
  const double dist = d.norm();
  if (dist >= r) return false;
  const Vec2 n = dist > 0 ? d * (1.0 / dist) : Vec2{1.0, 0.0};
  const double approach = (self.vel[hand] - other.vel[target]).dot(n);
  if (approach < config.punch_min_speed) return false;
  *speed = approach;
  return true;
}

}  // namespace

double PunchPower(double speed) {
  return std::clamp(1000.0 * speed, 1000.0, 3000.0);
}

double WrapToPi(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - std::numbers::pi;
}

double PdTorque(double q, double qdot, double target, double kp, double kd,
                double torque_limit) {
  const double tau = kp * WrapToPi(target - q) - kd * qdot;
  return std::clamp(tau, -torque_limit, torque_limit);
}

CharacterState RestState(const CharacterModel& model, double root_x,
                         int facing) {
  CharacterState s;
  s.root_x = root_x;
  s.facing = facing >= 0 ? 1 : -1;
  s.q = model.reference_pose();
  s.qdot.assign(model.dof(), 0.0);
  return s;
}

WorldState InitialWorld(const CharacterModel& model, double separation) {
  WorldState w;
  w.characters[0] = RestState(model, -0.5 * separation, 1);
  w.characters[1] = RestState(model, 0.5 * separation, -1);
  return w;
}

BodyPose ForwardKinematics(const CharacterModel& model,
                           const CharacterState& state) {
  LocalFrame f;
  ComputeLocal(model, state, f);
  BodyPose pose;
  pose.num_bones = model.num_bones();
  for (int b = 0; b < pose.num_bones; ++b) {
    const BoneSpec& bone = model.bones()[b];
    const Vec2 dir{std::cos(f.angle[b]), std::sin(f.angle[b])};
    pose.angle[b] =
        state.facing > 0 ? f.angle[b] : std::numbers::pi - f.angle[b];
    pose.omega[b] = state.facing * f.omega[b];
    pose.joint[b] = ToWorldPoint(model, state, f.joint[b]);
    pose.com[b] = ToWorldPoint(model, state, f.com[b]);
    pose.disc[b] = ToWorldPoint(model, state, f.disc[b]);
    pose.tip[b] = ToWorldPoint(model, state, f.joint[b] + dir * bone.length);
    pose.com_vel[b] = ToWorldVelocity(state, f.v_com[b]);
    pose.disc_vel[b] = ToWorldVelocity(state, f.v_disc[b]);
  }
  return pose;
}

ContactReport DetectContacts(const CharacterModel& model,
                             const WorldState& world, const Config& config) {
  ContactReport report;
  std::array<LocalFrame, 2> frames;
  std::array<WorldDiscs, 2> discs;
  for (int c = 0; c < 2; ++c) {
    ComputeLocal(model, world.characters[c], frames[c]);
    ToWorldDiscs(model, world.characters[c], frames[c], discs[c]);
  }
  const auto& bones = model.bones();
  for (int b0 = 0; b0 < discs[0].n; ++b0) {
    for (int b1 = 0; b1 < discs[1].n; ++b1) {
      PairForce t = Touch(discs[0].pos[b0], discs[0].vel[b0], bones[b0].radius,
                          discs[1].pos[b1], discs[1].vel[b1], bones[b1].radius,
                          config);
      if (!t.overlap) continue;
      t.pair.bone0 = b0;
      t.pair.bone1 = b1;
      report.pairs.push_back(t.pair);
    }
  }
  for (int c = 0; c < 2; ++c) {
    double speed = 0.0;
    const PunchSlot& slot = world.punches[c];
    if (PunchLands(model, slot, discs[c], discs[1 - c], config, &speed)) {
      report.events.push_back(
          PunchEvent{c, slot.hand, slot.target, speed, PunchPower(speed)});
    }
  }
  return report;
}

std::vector<PunchEvent> StepWorld(const CharacterModel& model,
                                  WorldState& world, const StepInputs& inputs,
                                  const Config& config,
                                  std::vector<ContactForce>* contact_log) {
  std::vector<PunchEvent> events;
  for (PunchSlot& slot : world.punches) {
    if (slot.flag == PunchFlag::kHappenedNow) {
      slot.flag = PunchFlag::kHappenedBefore;
    }
  }
  const double h = config.dt / config.substeps;
  const int nb = model.num_bones();
  const int n = model.dof();
  const auto& bones = model.bones();
  std::array<LocalFrame, 2> frames;
  std::array<WorldDiscs, 2> discs;
  std::array<std::array<Vec2, kMaxBones>, 2> force;
  std::array<DofMatrix, 2> factor;
  std::array<DofVector, 2> momentum{};
  DofVector rate{};
  DofVector gen{};

  // The substeps integrate joint momentum p = M(q) qdot: p += h F(q, qdot),
  // q += h M(q)^-1 p. Velocities are recovered from p at each substep.
  for (int c = 0; c < 2; ++c) {
    const CharacterState& s = world.characters[c];
    ComputePositions(model, s, frames[c]);
    FactorMass(model, frames[c], factor[c]);
    std::copy_n(s.qdot.begin(), n, rate.begin());
    MultiplyFactored(factor[c], n, rate, momentum[c]);
  }

  for (int step = 0; step < config.substeps; ++step) {
    for (int c = 0; c < 2; ++c) {
      CharacterState& s = world.characters[c];
      if (step > 0) {
        ComputePositions(model, s, frames[c]);
        FactorMass(model, frames[c], factor[c]);
        SolveFactored(factor[c], n, momentum[c], rate);
        std::copy_n(rate.begin(), n, s.qdot.begin());
      }
      ComputeVelocities(model, s, frames[c]);
      ToWorldDiscs(model, s, frames[c], discs[c]);
      force[c].fill(Vec2{});
    }
    for (int b0 = 0; b0 < nb; ++b0) {
      for (int b1 = 0; b1 < nb; ++b1) {
        const PairForce t =
            Touch(discs[0].pos[b0], discs[0].vel[b0], bones[b0].radius,
                  discs[1].pos[b1], discs[1].vel[b1], bones[b1].radius, config);
        if (!t.overlap || t.force == 0.0) continue;
        const Vec2 on1 = t.pair.normal * t.force;
        const Vec2 on0 = on1 * -1.0;
        force[0][b0] += on0;
        force[1][b1] += on1;
        if (contact_log) contact_log->push_back({b0, b1, on0, on1});
      }
    }
    for (int c = 0; c < 2; ++c) {
      PunchSlot& slot = world.punches[c];
      double speed = 0.0;
      if (PunchLands(model, slot, discs[c], discs[1 - c], config, &speed)) {
        slot.flag = PunchFlag::kHappenedNow;
        events.push_back(
            PunchEvent{c, slot.hand, slot.target, speed, PunchPower(speed)});
      }
    }
    for (int c = 0; c < 2; ++c) {
      CharacterState& s = world.characters[c];
      GeneralizedForce(model, s, frames[c], inputs.targets[c],
                       std::span<const Vec2>(force[c].data(), nb), config, gen);
      for (int d = 0; d < n; ++d) momentum[c][d] += h * gen[d];
      SolveFactored(factor[c], n, momentum[c], rate);
      bool clamped = false;
      for (int d = 0; d < n; ++d) {
        s.q[d] += h * rate[d];
        const JointLimit& lim = bones[model.bone_of_dof(d)].joint.limit;
        if (s.q[d] < lim.lo) {
          s.q[d] = lim.lo;
          if (rate[d] < 0) rate[d] = 0.0;
          clamped = true;
        } else if (s.q[d] > lim.hi) {
          s.q[d] = lim.hi;
          if (rate[d] > 0) rate[d] = 0.0;
          clamped = true;
        }
      }
      if (clamped) MultiplyFactored(factor[c], n, rate, momentum[c]);
      s.root_x += h * s.root_vx;
    }
  }
  for (int c = 0; c < 2; ++c) {
    CharacterState& s = world.characters[c];
    ComputePositions(model, s, frames[c]);
    FactorMass(model, frames[c], factor[c]);
    SolveFactored(factor[c], n, momentum[c], rate);
    std::copy_n(rate.begin(), n, s.qdot.begin());
  }
  world.clock += config.dt;
  for (int c = 0; c < 2; ++c) {
    if (!Finite(world.characters[c])) {
      throw SimulationDiverged("simulation diverged: character " +
                               std::to_string(c) + " has a non-finite state");
    }
  }
  return events;
}

StepResult StepWorldCopy(const CharacterModel& model, const WorldState& world,
                         const StepInputs& inputs, const Config& config) {
  StepResult r{world, {}};
  r.events = StepWorld(model, r.world, inputs, config);
  return r;
}

double CharacterEnergy(const CharacterModel& model,
                       const CharacterState& state, double gravity) {
  const BodyPose pose = ForwardKinematics(model, state);
  double e = 0.0;
  for (int b = 0; b < pose.num_bones; ++b) {
    const BoneSpec& bone = model.bones()[b];
    const double inertia = bone.mass * bone.length * bone.length / 12.0;
    e += 0.5 * bone.mass * pose.com_vel[b].dot(pose.com_vel[b]);
    e += 0.5 * inertia * pose.omega[b] * pose.omega[b];
    e += bone.mass * gravity * pose.com[b].y;
  }
  return e;
}

double TotalEnergy(const CharacterModel& model, const WorldState& world,
                   double gravity) {
  return CharacterEnergy(model, world.characters[0], gravity) +
         CharacterEnergy(model, world.characters[1], gravity);
}

}  // namespace midctl
