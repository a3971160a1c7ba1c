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


#include "midctl/json_bridge.h"

#include <cmath>
#include <set>

namespace midctl {

using nlohmann::json;

namespace {

const char* CommandName(CommandKind k) {
  switch (k) {
    case CommandKind::kSetMove: return "SetMove";
    case CommandKind::kSetPunch: return "SetPunch";
    case CommandKind::kRootMove: return "RootMove";
  }
  return "?";
}

const char* TaskName(TaskKind k) {
  switch (k) {
    case TaskKind::kNull: return "Null";
    case TaskKind::kMove: return "Move";
    case TaskKind::kPunch: return "Punch";
  }
  return "?";
}

const char* FlagName(PunchFlag f) {
  switch (f) {
    case PunchFlag::kNotHappened: return "notHappened";
    case PunchFlag::kHappenedNow: return "happenedNow";
    case PunchFlag::kHappenedBefore: return "happenedBefore";
  }
  return "?";
}

const char* PhaseName(MatchPhase p) {
  switch (p) {
    case MatchPhase::kRunning: return "running";
    case MatchPhase::kFinished: return "finished";
    case MatchPhase::kAborted: return "aborted";
  }
  return "?";
}

const char* HighlightName(Highlight h) {
  switch (h) {
    case Highlight::kNone: return "none";
    case Highlight::kGreen: return "green";
    case Highlight::kRed: return "red";
  }
  return "?";
}

const char* RoleName(Role r) { return r == Role::kServer ? "server" : "client"; }

json Real(double v) {
  if (!std::isfinite(v)) throw ProtocolError("non-finite real has no JSON form");
  return v;
}

json Reals(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(Real(x));
  return a;
}

json Point(Vec2 p) { return json::array({Real(p.x), Real(p.y)}); }

// Read access with the path of every field for diagnostics.
class Field {
 public:
  Field(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw ProtocolError((path_.empty() ? "/" : path_) + ": " + what);
  }

  // object with exactly these keys
  void Keys(std::initializer_list<const char*> keys) const {
    if (!j_.is_object()) Fail("expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.contains(k)) Fail("unknown field '" + k + "'");
    }
    for (const char* k : keys) {
      if (!j_.contains(k)) Fail(std::string("missing field '") + k + "'");
    }
  }

  Field operator[](const char* key) const { return Field(j_.at(key), path_ + "/" + key); }
  Field At(size_t i) const { return Field(j_.at(i), path_ + "/" + std::to_string(i)); }

  size_t Array(size_t min, size_t max) const {
    if (!j_.is_array()) Fail("expected an array");
    if (j_.size() < min || j_.size() > max) {
      Fail("expected " + std::to_string(min) + (min == max ? "" : ".." + std::to_string(max)) +
           " elements, got " + std::to_string(j_.size()));
    }
    return j_.size();
  }

  double Real() const {
    if (!j_.is_number()) Fail("expected a number");
    return j_.get<double>();
  }

  std::vector<double> Reals(size_t max) const {
    const size_t n = Array(0, max);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = At(i).Real();
    return out;
  }

  Vec2 Point() const {
    Array(2, 2);
    return {At(0).Real(), At(1).Real()};
  }

  int64_t Int(int64_t lo, int64_t hi) const {
    if (!j_.is_number_integer()) Fail("expected an integer");
    int64_t v = 0;
    if (j_.is_number_unsigned()) {
      const uint64_t u = j_.get<uint64_t>();
      if (u > static_cast<uint64_t>(hi)) Fail("out of range");
      v = static_cast<int64_t>(u);
    } else {
      v = j_.get<int64_t>();
    }
    if (v < lo || v > hi) Fail("out of range");
    return v;
  }

  uint64_t Unsigned() const {
    if (!j_.is_number_unsigned()) Fail("expected a non-negative integer");
    return j_.get<uint64_t>();
  }

  bool Bool() const {
    if (!j_.is_boolean()) Fail("expected true or false");
    return j_.get<bool>();
  }

  // enum by name, checked against every value up to `count`
  template <typename E, typename NameFn>
  E Enum(int count, NameFn name) const {
    if (!j_.is_string()) Fail("expected a string");
    const std::string s = j_.get<std::string>();
    for (int i = 0; i < count; ++i) {
      if (s == name(static_cast<E>(i))) return static_cast<E>(i);
    }
    Fail("unknown value '" + s + "'");
  }

  const json& raw() const { return j_; }

 private:
  const json& j_;
  std::string path_;
};

const char* SideName(Side s) { return ToString(s); }
const char* TargetName(BodyTarget t) { return ToString(t); }
const char* DirectionName(RootDirection d) { return ToString(d); }

Command GetCommand(const Field& f) {
  f.Keys({"player", "kind", "hand", "drag", "target", "direction"});
  Command c;
  c.player = static_cast<int>(f["player"].Int(0, 1));
  c.kind = f["kind"].Enum<CommandKind>(3, CommandName);
  c.hand = f["hand"].Enum<Side>(2, SideName);
  c.drag = f["drag"].Point();
  c.target = f["target"].Enum<BodyTarget>(2, TargetName);
  c.direction = f["direction"].Enum<RootDirection>(3, DirectionName);
  return c;
}

Task GetTask(const Field& f) {
  f.Keys({"kind", "hand", "moveTarget", "punchTarget", "startedAt", "punchFlag"});
  Task t;
  t.kind = f["kind"].Enum<TaskKind>(3, TaskName);
  t.hand = f["hand"].Enum<Side>(2, SideName);
  t.move_target = f["moveTarget"].Point();
  t.punch_target = f["punchTarget"].Enum<BodyTarget>(2, TargetName);
  t.started_at = f["startedAt"].Real();
  t.punch_flag = f["punchFlag"].Enum<PunchFlag>(3, FlagName);
  return t;
}

WorldState GetWorld(const Field& f) {
  f.Keys({"characters", "clock", "punches"});
  WorldState w;
  f["characters"].Array(2, 2);
  for (size_t i = 0; i < 2; ++i) {
    const Field c = f["characters"].At(i);
    c.Keys({"rootX", "rootVx", "facing", "q", "qdot"});
    CharacterState& s = w.characters[i];
    s.root_x = c["rootX"].Real();
    s.root_vx = c["rootVx"].Real();
    s.facing = static_cast<int>(c["facing"].Int(-1, 1));
    if (s.facing == 0) c["facing"].Fail("must be 1 or -1");
    s.q = c["q"].Reals(kMaxDof);
    s.qdot = c["qdot"].Reals(kMaxDof);
    if (s.q.size() != s.qdot.size()) c.Fail("q and qdot differ in length");
  }
  w.clock = f["clock"].Real();
  f["punches"].Array(2, 2);
  for (size_t i = 0; i < 2; ++i) {
    const Field p = f["punches"].At(i);
    p.Keys({"active", "hand", "target", "flag"});
    PunchSlot& s = w.punches[i];
    s.active = p["active"].Bool();
    s.hand = p["hand"].Enum<Side>(2, SideName);
    s.target = p["target"].Enum<BodyTarget>(2, TargetName);
    s.flag = p["flag"].Enum<PunchFlag>(3, FlagName);
  }
  return w;
}

json SplineJson(const ControlSpline& s) {
  json a = json::array();
  for (const ControlPoint& p : s.points) {
    a.push_back({{"time", Real(p.time)}, {"targets", Reals(p.targets)}});
  }
  return a;
}

ControlSpline GetSpline(const Field& f) {
  ControlSpline s;
  const size_t n = f.Array(0, kMaxSplinePoints);
  for (size_t i = 0; i < n; ++i) {
    const Field p = f.At(i);
    p.Keys({"time", "targets"});
    ControlPoint cp;
    cp.time = p["time"].Real();
    cp.targets = p["targets"].Reals(kMaxDof);
    if (cp.targets.empty()) p["targets"].Fail("empty");
    if (i > 0 && cp.targets.size() != s.points[0].targets.size()) {
      p["targets"].Fail("length differs from the first point");
    }
    s.points.push_back(std::move(cp));
  }
  return s;
}

}  // namespace

json ToJson(const Command& c) {
  return {{"player", c.player},
          {"kind", CommandName(c.kind)},
          {"hand", ToString(c.hand)},
          {"drag", Point(c.drag)},
          {"target", ToString(c.target)},
          {"direction", ToString(c.direction)}};
}

Command CommandFromJson(const json& j) { return GetCommand(Field(j, "")); }

json ToJson(const Task& t) {
  return {{"kind", TaskName(t.kind)},
          {"hand", ToString(t.hand)},
          {"moveTarget", Point(t.move_target)},
          {"punchTarget", ToString(t.punch_target)},
          {"startedAt", Real(t.started_at)},
          {"punchFlag", FlagName(t.punch_flag)}};
}

json ToJson(const WorldState& w) {
  json chars = json::array();
  for (const CharacterState& c : w.characters) {
    chars.push_back({{"rootX", Real(c.root_x)},
                     {"rootVx", Real(c.root_vx)},
                     {"facing", c.facing},
                     {"q", Reals(c.q)},
                     {"qdot", Reals(c.qdot)}});
  }
  json punches = json::array();
  for (const PunchSlot& s : w.punches) {
    punches.push_back({{"active", s.active},
                       {"hand", ToString(s.hand)},
                       {"target", ToString(s.target)},
                       {"flag", FlagName(s.flag)}});
  }
  return {{"characters", chars}, {"clock", Real(w.clock)}, {"punches", punches}};
}

json ToJson(const Message& msg) {
  if (const auto* m = std::get_if<Hello>(&msg)) {
    return {{"type", "Hello"}, {"version", m->version}, {"role", RoleName(m->role)}};
  }
  if (const auto* m = std::get_if<TaskCmd>(&msg)) {
    return {{"type", "TaskCmd"}, {"frame", m->frame}, {"command", ToJson(m->command)}};
  }
  if (const auto* m = std::get_if<ActionMsg>(&msg)) {
    return {{"type", "ActionMsg"},
            {"frame", m->frame},
            {"player", m->player},
            {"firstAction", Reals(m->action)},
            {"bestSpline", SplineJson(m->spline)}};
  }
  if (const auto* m = std::get_if<StateSync>(&msg)) {
    json tasks = json::array({ToJson(m->tasks[0]), ToJson(m->tasks[1])});
    return {{"type", "StateSync"},
            {"frame", m->frame},
            {"world", ToJson(m->world)},
            {"scores", json::array({m->scores[0], m->scores[1]})},
            {"tasks", tasks},
            {"phase", PhaseName(m->phase)},
            {"winner", m->winner},
            {"stalls", m->stalls}};
  }
  const Bye& b = std::get<Bye>(msg);
  return {{"type", "Bye"}, {"reason", b.reason}};
}

Message MessageFromJson(const json& j) {
  const Field f(j, "");
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    f.Fail("expected an object with a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "Hello") {
    f.Keys({"type", "version", "role"});
    return Hello{static_cast<uint32_t>(f["version"].Int(0, UINT32_MAX)),
                 f["role"].Enum<Role>(2, RoleName)};
  }
  if (type == "TaskCmd") {
    f.Keys({"type", "frame", "command"});
    return TaskCmd{f["frame"].Int(INT64_MIN, INT64_MAX), GetCommand(f["command"])};
  }
  if (type == "ActionMsg") {
    f.Keys({"type", "frame", "player", "firstAction", "bestSpline"});
    ActionMsg m;
    m.frame = f["frame"].Int(INT64_MIN, INT64_MAX);
    m.player = static_cast<int>(f["player"].Int(0, 1));
    m.action = f["firstAction"].Reals(kMaxDof);
    m.spline = GetSpline(f["bestSpline"]);
    return m;
  }
  if (type == "StateSync") {
    f.Keys({"type", "frame", "world", "scores", "tasks", "phase", "winner", "stalls"});
    StateSync m;
    m.frame = f["frame"].Int(INT64_MIN, INT64_MAX);
    m.world = GetWorld(f["world"]);
    f["scores"].Array(2, 2);
    f["tasks"].Array(2, 2);
    for (size_t i = 0; i < 2; ++i) {
      m.scores[i] = static_cast<int32_t>(f["scores"].At(i).Int(INT32_MIN, INT32_MAX));
      m.tasks[i] = GetTask(f["tasks"].At(i));
    }
    m.phase = f["phase"].Enum<MatchPhase>(3, PhaseName);
    m.winner = static_cast<int32_t>(f["winner"].Int(-1, 1));
    m.stalls = f["stalls"].Unsigned();
    return m;
  }
  if (type == "Bye") {
    f.Keys({"type", "reason"});
    return Bye{static_cast<uint32_t>(f["reason"].Int(0, UINT32_MAX))};
  }
  f["type"].Fail("unknown message type '" + type + "'");
}

std::string EncodeJson(const Message& msg) { return ToJson(msg).dump(); }

Message DecodeJson(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("/: not valid JSON");
  return MessageFromJson(j);
}

json ToJson(const HudState& hud) {
  json parts = json::array();
  for (const auto& per : hud.parts) {
    json a = json::array();
    for (Highlight h : per) a.push_back(HighlightName(h));
    parts.push_back(a);
  }
  json guides = json::array();
  for (const GuideLine& g : hud.guides) {
    guides.push_back({{"active", g.active},
                      {"hand", ToString(g.hand)},
                      {"from", Point(g.from)},
                      {"to", Point(g.to)}});
  }
  return {{"type", "HudState"}, {"parts", parts}, {"guides", guides}};
}

HudState HudFromJson(const json& j) {
  const Field f(j, "");
  f.Keys({"type", "parts", "guides"});
  if (j.at("type") != "HudState") f["type"].Fail("expected 'HudState'");
  HudState hud;
  f["parts"].Array(2, 2);
  f["guides"].Array(2, 2);
  for (size_t i = 0; i < 2; ++i) {
    const Field per = f["parts"].At(i);
    const size_t n = per.Array(0, kMaxBones);
    for (size_t b = 0; b < n; ++b) {
      hud.parts[i].push_back(per.At(b).Enum<Highlight>(3, HighlightName));
    }
    const Field g = f["guides"].At(i);
    g.Keys({"active", "hand", "from", "to"});
    hud.guides[i].active = g["active"].Bool();
    hud.guides[i].hand = g["hand"].Enum<Side>(2, SideName);
    hud.guides[i].from = g["from"].Point();
    hud.guides[i].to = g["to"].Point();
  }
  return hud;
}

}  // namespace midctl
