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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "midctl/harness.h"
#include "midctl/proto.h"

namespace midctl {
namespace {

constexpr double kPi = std::numbers::pi;
using Clock = std::chrono::steady_clock;

int failures = 0;

void Report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %-22s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --- optimizer ---------------------------------------------------------------

void Sphere() {
  const auto t0 = Clock::now();
  CmaState s = InitCma(21, Eigen::VectorXd::Ones(21), 0.3, 16);
  double best = -INFINITY;
  double best_norm = INFINITY;
  int gen = 0;
  for (; gen < 200 && best_norm >= 1e-2; ++gen) {
    std::vector<Candidate> pop = Ask(s, 1000 + gen, {});
    for (Candidate& c : pop) c.fitness = -c.x.squaredNorm();
    const Candidate& top = BestOf(pop);
    if (top.fitness > best) {
      best = top.fitness;
      best_norm = top.x.norm();
    }
    s = Tell(s, pop);
  }
  const double secs = Seconds(t0);
  Report("cmaes-sphere", best_norm < 1e-2 && secs < 5.0,
         Fmt("best |x| %.3g after %d generations (< 1e-2 within 200), %.3f s (< 5 s)",
             best_norm, gen, secs));
}

// --- spline ------------------------------------------------------------------

void SplineProperties() {
  const int dof = 6;
  const SplineBounds bounds{std::vector<JointLimit>(dof, JointLimit{-3.0, 3.0}), 0.6, 1e-3};
  const double delta = 1.0 / 30.0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> time(delta, 0.6);
  std::uniform_real_distribution<double> angle(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int knot_misses = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    ControlSpline s;
    s.points.resize(3);
    for (ControlPoint& p : s.points) {
      p.time = time(rng);
      p.targets.resize(dof);
      for (double& v : p.targets) v = angle(rng);
    }
    Canonicalize(s, bounds);
    for (const ControlPoint& p : s.points) knot_misses += Evaluate(s, p.time) != p.targets;
    const ControlSpline shifted = Shift(s, delta, bounds);
    for (int k = 0; k < 10; ++k) {
      const double t = unit(rng) * (s.points.back().time - delta);
      const std::vector<double> a = Evaluate(shifted, t);
      const std::vector<double> b = Evaluate(s, t + delta);
      for (int j = 0; j < dof; ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
    }
  }
  Report("spline-properties", knot_misses == 0 && worst <= 1e-9,
         Fmt("1000 splines: %d inexact knots (0), shift/evaluate max error %.2e (<= 1e-9)",
             knot_misses, worst));
}

// --- physics -----------------------------------------------------------------

WorldState FarApart(const CharacterModel& m) {
  WorldState w;
  w.characters[0] = RestState(m, -50.0, 1);
  w.characters[1] = RestState(m, 50.0, -1);
  return w;
}

void Physics() {
  const Config cfg;
  // energy: unactuated, contact-free two-link arm for 5 s
  BoneSpec upper;
  upper.name = "upper";
  upper.length = 0.3;
  upper.mass = 2.0;
  upper.radius = 0.05;
  upper.joint.limit = {-20.0, 20.0};
  upper.joint.reference = -kPi / 2;
  BoneSpec fore = upper;
  fore.name = "fore";
  fore.parent = 0;
  fore.length = 0.28;
  fore.mass = 1.2;
  fore.joint.reference = 0.0;
  const CharacterModel arm({upper, fore}, 1.5);
  WorldState w = FarApart(arm);
  for (CharacterState& c : w.characters) {
    c.q[0] = -kPi / 2 + 0.9;
    c.q[1] = 0.6;
  }
  const double e0 = TotalEnergy(arm, w, cfg.gravity);
  double drift = 0.0;
  for (int i = 0; i < 150; ++i) {
    StepWorld(arm, w, {}, cfg);
    drift = std::max(drift, std::abs(TotalEnergy(arm, w, cfg.gravity) - e0) / std::abs(e0));
  }

  // pendulum: uniform rod about one end, T = 2 pi sqrt(2L / 3g)
  BoneSpec rod;
  rod.name = "rod";
  rod.length = 0.5;
  rod.mass = 2.0;
  rod.radius = 0.0;
  rod.joint.limit = {-kPi, 0.0};
  rod.joint.reference = -kPi / 2;
  const CharacterModel pendulum({rod}, 2.0);
  WorldState p = FarApart(pendulum);
  for (CharacterState& c : p.characters) c.q[0] = -kPi / 2 + 0.05;
  Config one = cfg;
  one.substeps = 1;
  one.dt = cfg.dt / cfg.substeps;
  std::vector<double> crossings;
  double prev = p.characters[0].q[0] + kPi / 2;
  for (double t = 0.0; t < 5.0;) {
    StepWorld(pendulum, p, {}, one);
    t += one.dt;
    const double cur = p.characters[0].q[0] + kPi / 2;
    if (prev < 0 && cur >= 0) crossings.push_back(t - one.dt * cur / (cur - prev));
    prev = cur;
  }
  const double period = crossings.size() >= 2
                            ? (crossings.back() - crossings.front()) / (crossings.size() - 1)
                            : 0.0;
  const double expected = 2 * kPi * std::sqrt(2.0 * rod.length / 3.0 / cfg.gravity);
  const double period_error = std::abs(period - expected) / expected;

  // contact impulse balance between two default characters trading reaches
  const CharacterModel m = CharacterModel::Default();
  WorldState c = InitialWorld(m, 0.75);
  std::vector<double> reach = m.reference_pose();
  reach[2] = 0.3;
  reach[3] = 0.0;
  std::vector<ContactForce> log;
  for (int i = 0; i < 30; ++i) StepWorld(m, c, {{reach, reach}}, cfg, &log);
  const double h = cfg.dt / cfg.substeps;
  double imbalance = 0.0;
  for (const ContactForce& f : log) imbalance = std::max(imbalance, ((f.on0 + f.on1) * h).norm());

  Report("physics",
         drift < 0.01 && period_error < 0.02 && !log.empty() && imbalance <= 1e-9,
         Fmt("energy drift %.3f%% (< 1%%), pendulum period %.4f s vs %.4f s (%.2f%%, < 2%%), "
             "%zu contact impulses, max |J0 + J1| %.1e (<= 1e-9)",
             100 * drift, period, expected, 100 * period_error, log.size(), imbalance));
}

// --- costs -------------------------------------------------------------------

void CostTable() {
  const CharacterModel m = CharacterModel::Default();
  const Config cfg;
  WorldState w = InitialWorld(m, 1.0);
  // one actuated bone 20 degrees off its reference: the forearm, whose only
  // child (the hand) is welded
  int d = -1;
  for (int b = 0; b < m.num_bones(); ++b) {
    const BoneSpec& bone = m.bones()[b];
    if (bone.role == BoneRole::kForeArm && bone.side == Side::kLeft) d = m.dof_of_bone(b);
  }
  w.characters[0].q[d] -= 20.0 * kPi / 180.0;
  const double pose = CostPose(m, w, 0, cfg);

  const WorldState rest = InitialWorld(m, 1.0);
  const Vec2 hand = HandPosition(m, rest.characters[0], Side::kRight);
  const double move =
      CostMove(m, rest, 0, Task::Move(Side::kRight, hand + Vec2{0.06, 0.0}, 0.0), cfg);

  const double p05 = PunchPower(0.5), p2 = PunchPower(2.0), p5 = PunchPower(5.0);
  const bool pass = std::abs(pose - 1.0) < 1e-12 && std::abs(move - 9.0) < 1e-12 &&
                    p05 == 1000.0 && p2 == 2000.0 && p5 == 3000.0;
  Report("cost-table", pass,
         Fmt("pose 20 deg -> %.15g (1), move 6 cm -> %.15g (9), power 0.5/2/5 m/s -> "
             "%.0f/%.0f/%.0f (1000/2000/3000)",
             pose, move, p05, p2, p5));
}

// --- tasks -------------------------------------------------------------------

void MoveTask(const Settings& s) {
  const auto t0 = Clock::now();
  int ok = 0;
  for (int trial = 0; trial < 50; ++trial) ok += RunMoveTrial(s, trial, 0.04, 30).success;
  const double secs = Seconds(t0);
  Report("move-task", ok >= 40 && secs < 120.0,
         Fmt("%d/50 trials within 4 cm in 1.0 s (>= 80%%), %.1f s (< 2 min)", ok, secs));
}

void PunchTask(const Settings& s) {
  int landed = 0;
  bool in_range = true;
  double lo = INFINITY, hi = -INFINITY;
  for (int trial = 0; trial < 50; ++trial) {
    const PunchTrial p = RunPunchTrial(s, trial, 0.8, 30);
    if (!p.landed) continue;
    ++landed;
    lo = std::min(lo, p.power);
    hi = std::max(hi, p.power);
    in_range &= p.power >= 1000 && p.power <= 3000 && p.score >= 1 && p.score <= 10;
  }
  Report("punch-task", landed >= 40 && in_range,
         Fmt("%d/50 punches landed within 1.0 s (>= 80%%), power %.0f..%.0f, all in range: %s",
             landed, lo, hi, in_range ? "yes" : "no"));
}

void Ablation(const Settings& s) {
  const AblationReport r = RunAblation(s, 20, 24, 7);
  std::string detail = Fmt("both >= none on %d/20 seeds (>= 70%%);", r.both_beats_none);
  for (const AblationRow& row : r.rows) {
    detail += Fmt(" %s %.2f+-%.2f", row.variant.c_str(), row.mean, row.std_error);
  }
  Report("seeding-ablation", r.both_beats_none >= 14, detail);
}

void Determinism(const Settings& base) {
  Settings s = base;
  s.frame_cap = 300;
  std::ostringstream a, b;
  const MatchReport ra = RunMatch(s, {BotKind::kAggressor, BotKind::kRandom}, 42, &a);
  const MatchReport rb = RunMatch(s, {BotKind::kAggressor, BotKind::kRandom}, 42, &b);
  std::istringstream in(a.str());
  const ReplayReport rep = ReplayTrace(in);
  Report("determinism-replay",
         ra.trace_hash == rb.trace_hash && a.str() == b.str() && rep.ok() && rep.snapshots > 0,
         Fmt("trace hashes %016llx / %016llx, replay %lld frames, %d/%d snapshots match",
             static_cast<unsigned long long>(ra.trace_hash),
             static_cast<unsigned long long>(rb.trace_hash), static_cast<long long>(rep.frames),
             rep.snapshots - rep.snapshot_mismatches, rep.snapshots));
}

// --- protocol ----------------------------------------------------------------

Message RandomMessage(std::mt19937_64& rng, const WorldState& world) {
  auto real = [&] { return std::bit_cast<double>(rng()); };
  switch (rng() % 5) {
    case 0: return Hello{static_cast<uint32_t>(rng() % 3), static_cast<Role>(rng() % 2)};
    case 1:
      return TaskCmd{static_cast<int64_t>(rng() % 1000),
                     Command::SetMove(static_cast<int>(rng() % 2), Side::kLeft, {real(), real()})};
    case 2: {
      ActionMsg a;
      a.frame = static_cast<int64_t>(rng() % 1000);
      a.action.assign(6, 0.0);
      for (double& v : a.action) v = real();
      a.spline.points.assign(3, ControlPoint{real(), a.action});
      return a;
    }
    case 3: {
      StateSync s;
      s.frame = static_cast<int64_t>(rng() % 1000);
      s.world = world;
      s.world.characters[rng() % 2].q[rng() % 6] = real();
      s.scores = {static_cast<int32_t>(rng() % 100), static_cast<int32_t>(rng() % 100)};
      return s;
    }
    default: return Bye{static_cast<uint32_t>(rng() % 4)};
  }
}

bool Fuzz() {
  const WorldState world = InitialWorld(CharacterModel::Default(), 1.0);
  std::mt19937_64 rng(99);
  int64_t ok = 0, errors = 0, partial = 0, noncanonical = 0;
  for (int i = 0; i < 1000000; ++i) {
    std::vector<uint8_t> b;
    if (i % 3 == 0) {
      const uint32_t len = static_cast<uint32_t>(rng() % 96);
      b = {static_cast<uint8_t>(len), 0, 0, 0, static_cast<uint8_t>(rng() % 7)};
      for (uint32_t k = 1; k < len; ++k) b.push_back(static_cast<uint8_t>(rng()));
    } else {
      b = EncodeMessage(RandomMessage(rng, world));
      if (i % 3 == 1) {
        b[rng() % b.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
      } else {
        b.resize(rng() % b.size());
      }
    }
    const DecodeResult r = DecodeMessage(b);
    if (r.status == DecodeStatus::kOk) {
      ++ok;
      const std::vector<uint8_t> again = EncodeMessage(r.message);
      noncanonical += again != std::vector<uint8_t>(b.begin(), b.begin() + r.consumed);
    } else if (r.status == DecodeStatus::kProtocolError) {
      ++errors;
    } else {
      ++partial;
    }
  }
  std::printf("     fuzz: %lld parsed, %lld protocol errors, %lld incomplete, %lld non-canonical\n",
              static_cast<long long>(ok), static_cast<long long>(errors),
              static_cast<long long>(partial), static_cast<long long>(noncanonical));
  return noncanonical == 0;
}

void Protocol(const Settings& s) {
  const bool fuzz_ok = Fuzz();

  auto [a, b] = MakeDuplexPair();
  Connection at_server(std::move(a));
  Connection at_client(std::move(b));
  ServerState server = NewServer(s.model, s.separation, 5);
  ClientState client = NewClient(s.model, s.separation, 5);
  Bot attacker(BotKind::kBlocker, kServerPlayer, 1);
  Bot wanderer(BotKind::kRandom, kClientPlayer, 2);
  int syncs = 0, equal = 0;
  for (int guard = 0; server.match.frame < 1000 && guard < 1100; ++guard) {
    std::vector<Command> client_cmds;
    if (client.handshake) {
      if (auto c = wanderer.Act(s.model, client.match, s.config)) client_cmds.push_back(*c);
    }
    const uint64_t before = client.syncs;
    for (const Message& m : ClientFrame(s.model, client, at_client.Poll(), client_cmds, s.config)) {
      at_client.Send(m);
    }
    if (client.syncs > before) {
      ++syncs;
      equal += client.sync_hash == HashWorld(server.match.world);
    }
    if (server.match.phase != MatchPhase::kRunning) break;
    std::vector<Command> server_cmds;
    if (server.handshake) {
      if (auto c = attacker.Act(s.model, server.match, s.config)) server_cmds.push_back(*c);
    }
    for (const Message& m : ServerFrame(s.model, server, at_server.Poll(), server_cmds, s.config)) {
      at_server.Send(m);
    }
  }
  // the last StateSync is still in flight
  const uint64_t before = client.syncs;
  ClientFrame(s.model, client, at_client.Poll(), {}, s.config);
  if (client.syncs > before) {
    ++syncs;
    equal += client.sync_hash == HashWorld(server.match.world);
  }
  const bool loop_ok = server.match.frame >= 1000 && syncs == server.match.frame &&
                       equal == syncs && server.stalls == 0;
  Report("protocol", fuzz_ok && loop_ok,
         Fmt("1e6 fuzzed frames without crash%s; loopback %lld frames, %d/%d syncs with equal "
             "hashes, %llu stalls, scores %d-%d",
             fuzz_ok ? "" : " (non-canonical decode)",
             static_cast<long long>(server.match.frame), equal, syncs,
             static_cast<unsigned long long>(server.stalls), server.match.players[0].score,
             server.match.players[1].score));
}

void Throughput(const Settings& s) {
  const BenchReport r = RunBenchmark(s, 60, 3);
  Report("throughput", r.plans_per_second >= 15.0,
         Fmt("%.1f plans/s (soft target 30: %s, floor 15), %d rollouts x %d steps = %lld "
             "world steps per plan",
             r.plans_per_second, r.plans_per_second >= 30.0 ? "met" : "missed",
             r.rollouts_per_plan, s.config.RolloutSteps(),
             static_cast<long long>(r.world_steps_per_plan)));
}

}  // namespace
}  // namespace midctl

int main() {
  using namespace midctl;
  const auto t0 = Clock::now();
  const Settings settings;
  Sphere();
  SplineProperties();
  Physics();
  CostTable();
  MoveTask(settings);
  PunchTask(settings);
  Ablation(settings);
  Determinism(settings);
  Protocol(settings);
  Throughput(settings);
  std::printf("%d criteria failed, %.0f s\n", failures, Seconds(t0));
  return failures == 0 ? 0 : 1;
}
