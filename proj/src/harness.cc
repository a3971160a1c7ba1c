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


#include "midctl/harness.h"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <variant>

#include "midctl/json_bridge.h"
#include "midctl/proto.h"

namespace midctl {

using nlohmann::json;

namespace {

constexpr int kTraceVersion = 1;

// --- config file ---------------------------------------------------------------

using Member = std::variant<double Config::*, int Config::*, bool Config::*>;

const std::vector<std::pair<const char*, Member>>& ConfigFields() {
  static const std::vector<std::pair<const char*, Member>> fields = {
      {"dt", &Config::dt},
      {"max_task_time", &Config::max_task_time},
      {"horizon", &Config::horizon},
      {"opponent_horizon", &Config::opponent_horizon},
      {"cma_updates", &Config::cma_updates},
      {"population", &Config::population},
      {"last_best_seeds", &Config::last_best_seeds},
      {"default_pose_seeds", &Config::default_pose_seeds},
      {"spline_points", &Config::spline_points},
      {"sigma_pose_deg", &Config::sigma_pose_deg},
      {"sigma_move", &Config::sigma_move},
      {"sigma_hand_velocity", &Config::sigma_hand_velocity},
      {"sigma_hand_relax", &Config::sigma_hand_relax},
      {"punch_desired_speed", &Config::punch_desired_speed},
      {"punch_min_speed", &Config::punch_min_speed},
      {"knot_spacing", &Config::knot_spacing},
      {"seed_time_std_fraction", &Config::seed_time_std_fraction},
      {"cma_sigma0", &Config::cma_sigma0},
      {"seed_exact_mean", &Config::seed_exact_mean},
      {"use_last_best_seeds", &Config::use_last_best_seeds},
      {"use_default_pose_seeds", &Config::use_default_pose_seeds},
      {"cost_scale", &Config::cost_scale},
      {"gravity_compensation", &Config::gravity_compensation},
      {"shift_cma_mean", &Config::shift_cma_mean},
      {"rollout_return_phase", &Config::rollout_return_phase},
      {"substeps", &Config::substeps},
      {"gravity", &Config::gravity},
      {"contact_stiffness", &Config::contact_stiffness},
      {"contact_damping", &Config::contact_damping},
      {"root_speed", &Config::root_speed},
      {"win_score", &Config::win_score},
      {"punch_relax_factor", &Config::punch_relax_factor},
      {"playback_speed", &Config::playback_speed},
  };
  return fields;
}

// typed access to a config tree, errors carry "<source>: <path>: ..."
class Node {
 public:
  Node(const json& j, std::string source, std::string path)
      : j_(j), source_(std::move(source)), path_(std::move(path)) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw ConfigError(source_ + ": " + (path_.empty() ? "/" : path_) + ": " + what);
  }

  void Object(std::initializer_list<const char*> keys) const {
    if (!j_.is_object()) Fail("expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.contains(k)) Fail("unknown field '" + k + "'");
    }
  }

  bool Has(const char* key) const { return j_.contains(key); }
  Node operator[](const char* key) const {
    return Node(j_.at(key), source_, path_ + "/" + key);
  }
  Node At(size_t i) const { return Node(j_.at(i), source_, path_ + "/" + std::to_string(i)); }
  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  double Real() const {
    if (!j_.is_number()) Fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) Fail("expected a finite number");
    return v;
  }
  int64_t Int() const {
    if (!j_.is_number_integer()) Fail("expected an integer");
    if (j_.is_number_unsigned() && j_.get<uint64_t>() > static_cast<uint64_t>(INT64_MAX)) {
      Fail("integer out of range");
    }
    return j_.get<int64_t>();
  }
  int Int32() const {
    const int64_t v = Int();
    if (v < INT32_MIN || v > INT32_MAX) Fail("integer out of range");
    return static_cast<int>(v);
  }
  bool Bool() const {
    if (!j_.is_boolean()) Fail("expected true or false");
    return j_.get<bool>();
  }
  std::string String() const {
    if (!j_.is_string()) Fail("expected a string");
    return j_.get<std::string>();
  }
  size_t Array() const {
    if (!j_.is_array()) Fail("expected an array");
    return j_.size();
  }

 private:
  const json& j_;
  std::string source_;
  std::string path_;
};

template <typename E>
E EnumByName(const Node& n, int count) {
  const std::string s = n.String();
  for (int i = 0; i < count; ++i) {
    if (s == ToString(static_cast<E>(i))) return static_cast<E>(i);
  }
  n.Fail("unknown value '" + s + "'");
}

BoneSpec BoneFromJson(const Node& n, const std::vector<BoneSpec>& earlier) {
  n.Object({"name", "role", "side", "parent", "attach", "length", "mass", "radius",
            "disc_offset", "joint"});
  BoneSpec b;
  if (n.Has("name")) b.name = n["name"].String();
  if (n.Has("role")) b.role = EnumByName<BoneRole>(n["role"], 5);
  if (n.Has("side")) b.side = EnumByName<Side>(n["side"], 2);
  if (n.Has("parent")) {
    const Node p = n["parent"];
    if (p.raw().is_null()) {
      b.parent = -1;
    } else if (p.raw().is_string()) {
      const std::string name = p.String();
      b.parent = -2;
      for (size_t i = 0; i < earlier.size(); ++i) {
        if (earlier[i].name == name) b.parent = static_cast<int>(i);
      }
      if (b.parent == -2) p.Fail("no earlier bone named '" + name + "'");
    } else {
      b.parent = p.Int32();
    }
  }
  if (n.Has("attach")) b.attach = n["attach"].Real();
  if (n.Has("length")) b.length = n["length"].Real();
  if (n.Has("mass")) b.mass = n["mass"].Real();
  if (n.Has("radius")) b.radius = n["radius"].Real();
  if (n.Has("disc_offset")) b.disc_offset = n["disc_offset"].Real();
  if (n.Has("joint")) {
    const Node j = n["joint"];
    j.Object({"actuated", "fixed_angle", "limit", "reference", "kp", "kd",
              "torque_limit", "damping"});
    JointSpec& s = b.joint;
    if (j.Has("actuated")) s.actuated = j["actuated"].Bool();
    if (j.Has("fixed_angle")) s.fixed_angle = j["fixed_angle"].Real();
    if (j.Has("limit")) {
      const Node l = j["limit"];
      if (l.Array() != 2) l.Fail("expected [lo, hi]");
      s.limit = {l.At(0).Real(), l.At(1).Real()};
    }
    if (j.Has("reference")) s.reference = j["reference"].Real();
    if (j.Has("kp")) s.kp = j["kp"].Real();
    if (j.Has("kd")) s.kd = j["kd"].Real();
    if (j.Has("torque_limit")) s.torque_limit = j["torque_limit"].Real();
    if (j.Has("damping")) s.damping = j["damping"].Real();
  }
  return b;
}

json BoneToJson(const BoneSpec& b) {
  const JointSpec& s = b.joint;
  return {{"name", b.name},
          {"role", ToString(b.role)},
          {"side", ToString(b.side)},
          {"parent", b.parent},
          {"attach", b.attach},
          {"length", b.length},
          {"mass", b.mass},
          {"radius", b.radius},
          {"disc_offset", b.disc_offset},
          {"joint",
           {{"actuated", s.actuated},
            {"fixed_angle", s.fixed_angle},
            {"limit", json::array({s.limit.lo, s.limit.hi})},
            {"reference", s.reference},
            {"kp", s.kp},
            {"kd", s.kd},
            {"torque_limit", s.torque_limit},
            {"damping", s.damping}}}};
}

}  // namespace

json ConfigToJson(const Config& config) {
  json j = json::object();
  for (const auto& [name, member] : ConfigFields()) {
    std::visit([&](auto m) { j[name] = config.*m; }, member);
  }
  return j;
}

void ConfigFromJson(const json& j, Config& config, const std::string& where) {
  const Node n(j, where, "/config");
  if (!j.is_object()) n.Fail("expected an object");
  for (const auto& [key, value] : j.items()) {
    const Node f(value, where, "/config/" + key);
    bool known = false;
    for (const auto& [name, member] : ConfigFields()) {
      if (key != name) continue;
      known = true;
      if (auto* d = std::get_if<double Config::*>(&member)) config.*(*d) = f.Real();
      if (auto* i = std::get_if<int Config::*>(&member)) config.*(*i) = f.Int32();
      if (auto* b = std::get_if<bool Config::*>(&member)) config.*(*b) = f.Bool();
    }
    if (!known) n.Fail("unknown field '" + key + "'");
  }
}

Settings SettingsFromJson(const json& j, const std::string& source) {
  const Node root(j, source, "");
  root.Object({"config", "model", "match"});
  Settings s;
  if (root.Has("config")) ConfigFromJson(j.at("config"), s.config, source);
  try {
    s.config.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": /config: " + e.what());
  }
  if (root.Has("model")) {
    const Node m = root["model"];
    m.Object({"root_height", "bones"});
    double root_height = s.model.root_height();
    std::vector<BoneSpec> bones = s.model.bones();
    if (m.Has("root_height")) root_height = m["root_height"].Real();
    if (m.Has("bones")) {
      const Node list = m["bones"];
      bones.clear();
      for (size_t i = 0; i < list.Array(); ++i) bones.push_back(BoneFromJson(list.At(i), bones));
    }
    try {
      s.model = CharacterModel(bones, root_height);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": /model: " + e.what());
    }
  }
  if (root.Has("match")) {
    const Node m = root["match"];
    m.Object({"separation", "frame_cap", "snapshot_every"});
    if (m.Has("separation")) s.separation = m["separation"].Real();
    if (m.Has("frame_cap")) s.frame_cap = m["frame_cap"].Int();
    if (m.Has("snapshot_every")) s.snapshot_every = m["snapshot_every"].Int32();
    if (s.separation <= 0) m["separation"].Fail("must be positive");
    if (s.frame_cap <= 0) m["frame_cap"].Fail("must be positive");
    if (s.snapshot_every <= 0) m["snapshot_every"].Fail("must be positive");
  }
  return s;
}

Settings LoadSettings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  json j = json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError(path + ": not valid JSON");
  return SettingsFromJson(j, path);
}

json SettingsToJson(const Settings& s) {
  json bones = json::array();
  for (const BoneSpec& b : s.model.bones()) bones.push_back(BoneToJson(b));
  return {{"config", ConfigToJson(s.config)},
          {"model", {{"root_height", s.model.root_height()}, {"bones", bones}}},
          {"match",
           {{"separation", s.separation},
            {"frame_cap", s.frame_cap},
            {"snapshot_every", s.snapshot_every}}}};
}

// --- bots ----------------------------------------------------------------------

const char* ToString(BotKind kind) {
  switch (kind) {
    case BotKind::kIdle: return "idle";
    case BotKind::kAggressor: return "aggressor";
    case BotKind::kBlocker: return "blocker";
    case BotKind::kRandom: return "random";
  }
  return "?";
}

BotKind ParseBotKind(std::string_view name) {
  for (BotKind k : {BotKind::kIdle, BotKind::kAggressor, BotKind::kBlocker, BotKind::kRandom}) {
    if (name == ToString(k)) return k;
  }
  throw ConfigError("unknown bot '" + std::string(name) +
                    "' (idle, aggressor, blocker, random)");
}

Bot::Bot(BotKind kind, int player, uint64_t seed) : kind_(kind), player_(player), rng_(seed) {}

std::optional<Command> Bot::Act(const CharacterModel& model, const MatchState& match,
                                const Config&) {
  if (match.phase != MatchPhase::kRunning) return std::nullopt;
  switch (kind_) {
    case BotKind::kIdle: return std::nullopt;
    case BotKind::kAggressor: return Aggress(model, match);
    case BotKind::kBlocker: return Block(model, match);
    case BotKind::kRandom: return Wander(model, match);
  }
  return std::nullopt;
}

std::optional<Command> Bot::Aggress(const CharacterModel& model, const MatchState& match) {
  const CharacterState& me = match.world.characters[player_];
  const BodyPose mine = ForwardKinematics(model, me);
  const BodyPose theirs = ForwardKinematics(model, match.world.characters[1 - player_]);
  const auto& bones = model.bones();

  // nearest open target, falling back to the nearest one
  struct Option {
    Side hand;
    BodyTarget target;
    double gap;  // shoulder-to-target distance beyond the reach
    bool open;
  };
  std::optional<Option> best;
  for (BodyTarget t : {BodyTarget::kHead, BodyTarget::kChest}) {
    const int tb = model.target_bone(t);
    bool open = true;
    for (Side s : {Side::kLeft, Side::kRight}) {
      const int hb = model.hand_bone(s);
      const double clear = bones[hb].radius + bones[tb].radius + 0.02;
      if ((theirs.disc[hb] - theirs.disc[tb]).norm() < clear) open = false;
    }
    for (Side s : {Side::kLeft, Side::kRight}) {
      const double gap = (theirs.disc[tb] - mine.joint[model.shoulder_bone(s)]).norm() -
                         model.arm_reach(s) - bones[tb].radius;
      const Option o{s, t, gap, open};
      if (!best || (o.open && !best->open) ||
          (o.open == best->open && o.gap < best->gap)) {
        best = o;
      }
    }
  }
  const bool moving = me.root_vx != 0.0;
  // walk in until the target is well inside the reach
  if (best->gap > -0.05) {
    if (me.root_vx * me.facing <= 0.0) return Command::RootMove(player_, RootDirection::kForward);
    return std::nullopt;
  }
  if (moving) return Command::RootMove(player_, RootDirection::kStop);
  if (match.players[player_].task.kind == TaskKind::kNull) {
    return Command::SetPunch(player_, best->hand, best->target);
  }
  return std::nullopt;
}

std::optional<Command> Bot::Block(const CharacterModel& model, const MatchState& match) {
  const Task& threat = match.players[1 - player_].task;
  if (threat.kind != TaskKind::kPunch || threat.punch_flag != PunchFlag::kNotHappened) {
    return std::nullopt;
  }
  const CharacterState& me = match.world.characters[player_];
  const Vec2 fist = HandPosition(model, match.world.characters[1 - player_], threat.hand);
  Side hand = Side::kLeft;
  double nearest = INFINITY;
  for (Side s : {Side::kLeft, Side::kRight}) {
    const double d = (HandPosition(model, me, s) - fist).norm();
    if (d < nearest) {
      nearest = d;
      hand = s;
    }
  }
  const Task& mine = match.players[player_].task;
  // re-aim only when the fist has moved on, so the planner keeps its state
  if (mine.kind == TaskKind::kMove && (mine.move_target - fist).norm() < 0.1) {
    return std::nullopt;
  }
  return Command::SetMove(player_, hand, fist - HandPosition(model, me, hand));
}

std::optional<Command> Bot::Wander(const CharacterModel&, const MatchState& match) {
  // draw every frame so the stream does not depend on the task state
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double roll = u(rng_);
  const int pick = static_cast<int>(rng_() % 3);
  const Side hand = rng_() % 2 ? Side::kRight : Side::kLeft;
  const BodyTarget target = rng_() % 2 ? BodyTarget::kChest : BodyTarget::kHead;
  const double angle = u(rng_) * 2.0 * std::numbers::pi;
  const double radius = 0.2 * std::sqrt(u(rng_));
  const auto direction = static_cast<RootDirection>(rng_() % 3);
  if (match.players[player_].task.kind != TaskKind::kNull || roll > 1.0 / 15.0) {
    return std::nullopt;
  }
  switch (pick) {
    case 0: return Command::SetPunch(player_, hand, target);
    case 1:
      return Command::SetMove(player_, hand,
                              {radius * std::cos(angle), radius * std::sin(angle)});
    default: return Command::RootMove(player_, direction);
  }
}

// --- matches and traces ----------------------------------------------------------

namespace {

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

json EventJson(const PunchEvent& e) {
  return {{"attacker", e.attacker},
          {"hand", ToString(e.hand)},
          {"target", ToString(e.target)},
          {"relativeSpeed", e.relative_speed},
          {"power", e.power},
          {"score", ScorePunch(e)}};
}

json FrameRecord(int64_t frame, const std::vector<Command>& commands, const MatchState& match,
                 const TickResult& r, bool snapshot) {
  json cmds = json::array();
  for (const Command& c : commands) cmds.push_back(ToJson(c));
  json events = json::array();
  for (const PunchEvent& e : r.events) events.push_back(EventJson(e));
  json rec = {{"type", "frame"},
              {"frame", frame},
              {"commands", cmds},
              {"tasks", json::array({ToJson(match.players[0].task), ToJson(match.players[1].task)})},
              {"actions", json::array({r.actions[0], r.actions[1]})},
              {"events", events},
              {"scores", json::array({match.players[0].score, match.players[1].score})}};
  if (snapshot) {
    rec["snapshot"] = {{"hash", Hex(HashWorld(match.world))}, {"world", ToJson(match.world)}};
  }
  return rec;
}

json Header(const Settings& settings, std::array<BotKind, 2> bots, uint64_t seed) {
  return {{"type", "header"},
          {"version", kTraceVersion},
          {"seed", seed},
          {"bots", json::array({ToString(bots[0]), ToString(bots[1])})},
          {"settings", SettingsToJson(settings)}};
}

class TraceSink {
 public:
  explicit TraceSink(std::ostream* out) : out_(out) {}
  void Line(const json& j) {
    const std::string text = j.dump() + "\n";
    hash_ = Fnv1a64(std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()), hash_);
    if (out_) *out_ << text;
  }
  uint64_t hash() const { return hash_; }

 private:
  std::ostream* out_;
  uint64_t hash_ = kFnvOffsetBasis;
};

// tasks that ended this frame by completion or by timeout; replaced tasks
// count as neither
void CountEndings(const std::array<Task, 2>& before, const std::vector<Command>& commands,
                  const MatchState& match, double clock, const Config& config,
                  MatchReport& report) {
  for (int i = 0; i < 2; ++i) {
    if (before[i].kind == TaskKind::kNull) continue;
    bool replaced = false;
    for (const Command& c : commands) {
      replaced |= c.player == i && c.kind != CommandKind::kRootMove;
    }
    const Task& now = match.players[i].task;
    if (replaced || (now.kind == before[i].kind && now.started_at == before[i].started_at)) {
      continue;
    }
    if (before[i].age(clock) > config.max_task_time + 1e-9) {
      report.tasks_timed_out += 1;
    } else {
      report.tasks_completed += 1;
    }
  }
}

}  // namespace

json ToJson(const MatchReport& r) {
  return {{"winner", r.winner},
          {"frames", r.frames},
          {"punches", r.punches},
          {"scores", r.scores},
          {"landed", r.landed},
          {"tasksCompleted", r.tasks_completed},
          {"tasksTimedOut", r.tasks_timed_out},
          {"taskSuccessRate", r.task_success_rate},
          {"aborted", r.aborted},
          {"diagnostic", r.diagnostic},
          {"traceHash", Hex(r.trace_hash)}};
}

MatchReport RunMatch(const Settings& settings, std::array<BotKind, 2> kinds, uint64_t seed,
                     std::ostream* trace) {
  const CharacterModel& model = settings.model;
  const Config& config = settings.config;
  config.Validate();
  MatchState match = NewMatch(model, settings.separation, seed);
  std::array<Bot, 2> bots = {Bot(kinds[0], 0, MixSeed(seed, 0x100)),
                             Bot(kinds[1], 1, MixSeed(seed, 0x101))};
  TraceSink sink(trace);
  sink.Line(Header(settings, kinds, seed));

  MatchReport report;
  while (match.phase == MatchPhase::kRunning && match.frame < settings.frame_cap) {
    std::vector<Command> commands;
    for (Bot& b : bots) {
      if (auto c = b.Act(model, match, config)) commands.push_back(*c);
    }
    const std::array<Task, 2> before = {match.players[0].task, match.players[1].task};
    const double clock = match.world.clock;
    const int64_t frame = match.frame;
    const TickResult r = Tick(model, match, commands, config);
    CountEndings(before, commands, match, clock, config, report);
    for (const PunchEvent& e : r.events) {
      report.punches += 1;
      report.landed[e.attacker] += 1;
    }
    sink.Line(FrameRecord(frame, commands, match, r, (frame + 1) % settings.snapshot_every == 0));
  }
  report.frames = match.frame;
  report.scores = {match.players[0].score, match.players[1].score};
  report.winner = match.phase == MatchPhase::kFinished ? match.winner : -1;
  report.aborted = match.phase == MatchPhase::kAborted;
  report.diagnostic = match.diagnostic;
  const int ended = report.tasks_completed + report.tasks_timed_out;
  report.task_success_rate = ended > 0 ? static_cast<double>(report.tasks_completed) / ended : 0.0;
  json footer = ToJson(report);
  footer.erase("traceHash");
  footer["type"] = "report";
  sink.Line(footer);
  report.trace_hash = sink.hash();
  return report;
}

ReplayReport ReplayTrace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trace: empty");
  const json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("type", "") != "header") {
    throw ConfigError("trace: line 1: expected a header record");
  }
  if (header.value("version", 0) != kTraceVersion) throw ConfigError("trace: unsupported version");
  const Settings settings = SettingsFromJson(header.at("settings"), "trace header");
  const uint64_t seed = header.at("seed").get<uint64_t>();
  MatchState match = NewMatch(settings.model, settings.separation, seed);

  ReplayReport report;
  int64_t line_no = 1;
  auto mismatch = [&](int64_t frame) {
    if (report.first_mismatch < 0) report.first_mismatch = frame;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw ConfigError("trace: line " + std::to_string(line_no) + ": not a JSON object");
    }
    const std::string type = rec.value("type", "");
    if (type == "report") break;
    if (type != "frame") {
      throw ConfigError("trace: line " + std::to_string(line_no) + ": unknown record type");
    }
    const int64_t frame = rec.at("frame").get<int64_t>();
    if (match.phase != MatchPhase::kRunning || frame != match.frame) {
      report.record_mismatches += 1;
      mismatch(frame);
      break;
    }
    std::vector<Command> commands;
    try {
      for (const json& c : rec.at("commands")) commands.push_back(CommandFromJson(c));
    } catch (const ProtocolError& e) {
      throw ConfigError("trace: line " + std::to_string(line_no) + ": " + e.what());
    }
    const TickResult r = Tick(settings.model, match, commands, settings.config);
    const bool snapshot = rec.contains("snapshot");
    const json again = FrameRecord(frame, commands, match, r, snapshot);
    report.frames += 1;
    if (snapshot) {
      report.snapshots += 1;
      if (rec.at("snapshot").at("hash") != again.at("snapshot").at("hash")) {
        report.snapshot_mismatches += 1;
        mismatch(frame);
      }
    }
    if (again.dump() != line) {
      report.record_mismatches += 1;
      mismatch(frame);
    }
  }
  return report;
}

// --- benchmark and ablation --------------------------------------------------------

json ToJson(const BenchReport& r) {
  return {{"plans", r.plans},
          {"seconds", r.seconds},
          {"plansPerSecond", r.plans_per_second},
          {"rolloutsPerPlan", r.rollouts_per_plan},
          {"worldStepsPerPlan", r.world_steps_per_plan},
          {"worldStepsPerSecond", r.world_steps_per_second}};
}

BenchReport RunBenchmark(const Settings& settings, int frames, uint64_t seed) {
  settings.config.Validate();
  if (frames <= 0) throw ConfigError("benchmark needs at least one frame");
  const CharacterModel& model = settings.model;
  const Config& config = settings.config;
  MatchState match = NewMatch(model, settings.separation, seed);
  Bot attacker(BotKind::kAggressor, 0, MixSeed(seed, 0x100));

  BenchReport report;
  report.rollouts_per_plan = config.population * config.cma_updates;
  report.world_steps_per_plan =
      static_cast<int64_t>(report.rollouts_per_plan) * config.RolloutSteps();
  using Clock = std::chrono::steady_clock;
  Clock::duration spent{};
  for (int f = 0; f < frames && match.phase == MatchPhase::kRunning; ++f) {
    std::vector<Command> commands;
    if (auto c = attacker.Act(model, match, config)) commands.push_back(*c);
    const auto t0 = Clock::now();
    Tick(model, match, commands, config);
    spent += Clock::now() - t0;
    report.plans += 2;
  }
  report.seconds = std::chrono::duration<double>(spent).count();
  if (report.seconds > 0) {
    report.plans_per_second = report.plans / report.seconds;
    report.world_steps_per_second =
        static_cast<double>(report.plans) * report.world_steps_per_plan / report.seconds;
  }
  return report;
}

namespace {

// mean best fitness per frame of one character working on `task`
double PlanSeries(const Settings& settings, const Config& config, const Task& task,
                  uint64_t seed, int frames) {
  const CharacterModel& model = settings.model;
  WorldState world = InitialWorld(model, settings.separation);
  PlanningContext ctx;
  ctx.model = &model;
  ctx.self = 0;
  ctx.task = task;
  ctx.seed = seed;
  const std::vector<double> hold = model.reference_pose();
  double sum = 0.0;
  for (int f = 0; f < frames; ++f) {
    ctx.world = world;
    ctx.frame = f;
    const PlanResult r = Plan(ctx, config);
    sum += r.best_fitness;
    ctx.cma = r.cma;
    ctx.last_best = r.best_spline;
    StepWorld(model, world, StepInputs{{r.first_action, hold}}, config);
  }
  return sum / frames;
}

}  // namespace

AblationReport RunAblation(const Settings& settings, int seeds, int frames, uint64_t seed) {
  settings.config.Validate();
  if (seeds < 2) throw ConfigError("ablation needs at least 2 seeds");
  if (frames <= 0) throw ConfigError("ablation needs at least one frame");
  struct Variant {
    const char* name;
    bool last_best;
    bool default_pose;
  };
  const Variant variants[] = {{"none", false, false},
                              {"last-best", true, false},
                              {"default-pose", false, true},
                              {"both", true, true}};
  AblationReport report;
  const WorldState start = InitialWorld(settings.model, settings.separation);
  for (const Variant& v : variants) {
    Config config = settings.config;
    config.use_last_best_seeds = v.last_best;
    config.use_default_pose_seeds = v.default_pose;
    AblationRow row;
    row.variant = v.name;
    for (int s = 0; s < seeds; ++s) {
      const uint64_t trial = MixSeed(seed, static_cast<uint64_t>(s));
      const Task task = MoveTrialTask(settings.model, start, trial, 0.2);
      row.per_seed.push_back(PlanSeries(settings, config, task, trial, frames));
    }
    double mean = 0.0;
    for (double x : row.per_seed) mean += x;
    mean /= seeds;
    double var = 0.0;
    for (double x : row.per_seed) var += (x - mean) * (x - mean);
    row.mean = mean;
    row.std_error = std::sqrt(var / (seeds - 1) / seeds);
    report.rows.push_back(row);
  }
  for (int s = 0; s < seeds; ++s) {
    if (report.rows[3].per_seed[s] >= report.rows[0].per_seed[s]) report.both_beats_none += 1;
  }
  return report;
}

// --- trials ----------------------------------------------------------------------

Task MoveTrialTask(const CharacterModel& model, const WorldState& world, uint64_t seed,
                   double distance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const Side side = rng() % 2 ? Side::kRight : Side::kLeft;
  const CharacterState& me = world.characters[0];
  const BodyPose pose = ForwardKinematics(model, me);
  const Vec2 hand = pose.disc[model.hand_bone(side)];
  const Vec2 shoulder = pose.joint[model.shoulder_bone(side)];
  // reachable: comfortably inside the arm's reach from the shoulder
  for (;;) {
    const double a = angle(rng);
    const Vec2 target = hand + Vec2{std::cos(a), std::sin(a)} * distance;
    if ((target - shoulder).norm() <= 0.9 * model.arm_reach(side)) {
      return Task::Move(side, target, world.clock);
    }
  }
}

MoveTrial RunMoveTrial(const Settings& settings, uint64_t seed, double tolerance,
                       int max_frames) {
  const CharacterModel& model = settings.model;
  WorldState world = InitialWorld(model, settings.separation);
  const Task task = MoveTrialTask(model, world, seed, 0.2);
  PlanningContext ctx;
  ctx.model = &model;
  ctx.self = 0;
  ctx.task = task;
  ctx.seed = seed;
  const std::vector<double> hold = model.reference_pose();
  MoveTrial out;
  out.best_distance = INFINITY;
  for (int f = 0; f < max_frames; ++f) {
    ctx.world = world;
    ctx.frame = f;
    const PlanResult r = Plan(ctx, settings.config);
    ctx.cma = r.cma;
    ctx.last_best = r.best_spline;
    StepWorld(model, world, StepInputs{{r.first_action, hold}}, settings.config);
    out.frames = f + 1;
    const double d = (HandPosition(model, world.characters[0], task.hand) - task.move_target).norm();
    out.best_distance = std::min(out.best_distance, d);
    if (d <= tolerance) {
      out.success = true;
      break;
    }
  }
  return out;
}

PunchTrial RunPunchTrial(const Settings& settings, int trial, double separation,
                         int max_frames) {
  const CharacterModel& model = settings.model;
  WorldState world = InitialWorld(model, separation);
  PunchTrial out;
  out.hand = trial % 2 ? Side::kLeft : Side::kRight;
  out.target = (trial / 2) % 2 ? BodyTarget::kChest : BodyTarget::kHead;
  const Task task = Task::Punch(out.hand, out.target, world.clock);
  PlanningContext ctx;
  ctx.model = &model;
  ctx.self = 0;
  ctx.task = task;
  ctx.seed = static_cast<uint64_t>(trial);
  const std::vector<double> hold = model.reference_pose();
  for (int f = 0; f < max_frames; ++f) {
    world.punches[0] = SlotFor(task);
    ctx.world = world;
    ctx.frame = f;
    const PlanResult r = Plan(ctx, settings.config);
    ctx.cma = r.cma;
    ctx.last_best = r.best_spline;
    const auto events = StepWorld(model, world, StepInputs{{r.first_action, hold}}, settings.config);
    out.frames = f + 1;
    if (!events.empty()) {
      out.landed = true;
      out.power = events.front().power;
      out.score = ScorePunch(events.front());
      break;
    }
  }
  return out;
}

}  // namespace midctl
