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


#include "midctl/proto.h"

#include <algorithm>
#include <bit>
#include <cstring>

namespace midctl {

MessageTag TagOf(const Message& msg) {
  return static_cast<MessageTag>(msg.index() + 1);
}

const char* ToString(MessageTag tag) {
  switch (tag) {
    case MessageTag::kHello: return "Hello";
    case MessageTag::kTaskCmd: return "TaskCmd";
    case MessageTag::kActionMsg: return "ActionMsg";
    case MessageTag::kStateSync: return "StateSync";
    case MessageTag::kBye: return "Bye";
  }
  return "?";
}

namespace {

class Writer {
 public:
  void U8(uint8_t v) { out_.push_back(v); }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void I32(int32_t v) { U32(static_cast<uint32_t>(v)); }
  void I64(int64_t v) { U64(static_cast<uint64_t>(v)); }
  void F64(double v) { U64(std::bit_cast<uint64_t>(v)); }
  std::vector<uint8_t>& bytes() { return out_; }

 private:
  std::vector<uint8_t> out_;
};

struct Malformed {
  std::string what;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}
  uint8_t U8() {
    Need(1);
    return in_[pos_++];
  }
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  uint64_t U64() {
    Need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  int32_t I32() { return static_cast<int32_t>(U32()); }
  int64_t I64() { return static_cast<int64_t>(U64()); }
  double F64() { return std::bit_cast<double>(U64()); }
  uint8_t Enum(uint8_t max, const char* what) {
    const uint8_t v = U8();
    if (v > max) throw Malformed{std::string("bad ") + what};
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void Need(size_t n) {
    if (in_.size() - pos_ < n) throw Malformed{"payload shorter than its fields"};
  }
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

void PutCommand(Writer& w, const Command& c) {
  w.U8(static_cast<uint8_t>(c.player));
  w.U8(static_cast<uint8_t>(c.kind));
  w.U8(static_cast<uint8_t>(c.hand));
  w.F64(c.drag.x);
  w.F64(c.drag.y);
  w.U8(static_cast<uint8_t>(c.target));
  w.U8(static_cast<uint8_t>(c.direction));
}

Command GetCommand(Reader& r) {
  Command c;
  c.player = r.Enum(1, "player");
  c.kind = static_cast<CommandKind>(r.Enum(2, "command kind"));
  c.hand = static_cast<Side>(r.Enum(1, "hand"));
  c.drag.x = r.F64();
  c.drag.y = r.F64();
  c.target = static_cast<BodyTarget>(r.Enum(1, "target"));
  c.direction = static_cast<RootDirection>(r.Enum(2, "direction"));
  return c;
}

void PutTask(Writer& w, const Task& t) {
  w.U8(static_cast<uint8_t>(t.kind));
  w.U8(static_cast<uint8_t>(t.hand));
  w.F64(t.move_target.x);
  w.F64(t.move_target.y);
  w.U8(static_cast<uint8_t>(t.punch_target));
  w.F64(t.started_at);
  w.U8(static_cast<uint8_t>(t.punch_flag));
}

Task GetTask(Reader& r) {
  Task t;
  t.kind = static_cast<TaskKind>(r.Enum(2, "task kind"));
  t.hand = static_cast<Side>(r.Enum(1, "hand"));
  t.move_target.x = r.F64();
  t.move_target.y = r.F64();
  t.punch_target = static_cast<BodyTarget>(r.Enum(1, "target"));
  t.started_at = r.F64();
  t.punch_flag = static_cast<PunchFlag>(r.Enum(2, "punch flag"));
  return t;
}

void PutReals(Writer& w, const std::vector<double>& v) {
  for (double x : v) w.F64(x);
}

std::vector<double> GetReals(Reader& r, uint32_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = r.F64();
  return v;
}

void PutWorld(Writer& w, const WorldState& world) {
  for (const CharacterState& c : world.characters) {
    w.F64(c.root_x);
    w.F64(c.root_vx);
    w.I32(c.facing);
    w.U32(static_cast<uint32_t>(c.q.size()));
    PutReals(w, c.q);
    PutReals(w, c.qdot);
  }
  w.F64(world.clock);
  for (const PunchSlot& s : world.punches) {
    w.U8(s.active ? 1 : 0);
    w.U8(static_cast<uint8_t>(s.hand));
    w.U8(static_cast<uint8_t>(s.target));
    w.U8(static_cast<uint8_t>(s.flag));
  }
}

WorldState GetWorld(Reader& r) {
  WorldState world;
  for (CharacterState& c : world.characters) {
    c.root_x = r.F64();
    c.root_vx = r.F64();
    c.facing = r.I32();
    if (c.facing != 1 && c.facing != -1) throw Malformed{"bad facing"};
    const uint32_t n = r.U32();
    if (n > static_cast<uint32_t>(kMaxDof)) throw Malformed{"too many joints"};
    c.q = GetReals(r, n);
    c.qdot = GetReals(r, n);
  }
  world.clock = r.F64();
  for (PunchSlot& s : world.punches) {
    s.active = r.Enum(1, "flag") != 0;
    s.hand = static_cast<Side>(r.Enum(1, "hand"));
    s.target = static_cast<BodyTarget>(r.Enum(1, "target"));
    s.flag = static_cast<PunchFlag>(r.Enum(2, "punch flag"));
  }
  return world;
}

void PutPayload(Writer& w, const Message& msg) {
  if (const auto* m = std::get_if<Hello>(&msg)) {
    w.U32(m->version);
    w.U8(static_cast<uint8_t>(m->role));
  } else if (const auto* m = std::get_if<TaskCmd>(&msg)) {
    w.I64(m->frame);
    PutCommand(w, m->command);
  } else if (const auto* m = std::get_if<ActionMsg>(&msg)) {
    w.I64(m->frame);
    w.U8(static_cast<uint8_t>(m->player));
    w.U32(static_cast<uint32_t>(m->action.size()));
    PutReals(w, m->action);
    w.U32(static_cast<uint32_t>(m->spline.points.size()));
    w.U32(static_cast<uint32_t>(m->spline.dof()));
    for (const ControlPoint& p : m->spline.points) {
      w.F64(p.time);
      PutReals(w, p.targets);
    }
  } else if (const auto* m = std::get_if<StateSync>(&msg)) {
    w.I64(m->frame);
    PutWorld(w, m->world);
    for (int32_t s : m->scores) w.I32(s);
    for (const Task& t : m->tasks) PutTask(w, t);
    w.U8(static_cast<uint8_t>(m->phase));
    w.I32(m->winner);
    w.U64(m->stalls);
  } else if (const auto* m = std::get_if<Bye>(&msg)) {
    w.U32(m->reason);
  }
}

Message GetPayload(MessageTag tag, Reader& r) {
  switch (tag) {
    case MessageTag::kHello: {
      Hello m;
      m.version = r.U32();
      m.role = static_cast<Role>(r.Enum(1, "role"));
      return m;
    }
    case MessageTag::kTaskCmd: {
      TaskCmd m;
      m.frame = r.I64();
      m.command = GetCommand(r);
      return m;
    }
    case MessageTag::kActionMsg: {
      ActionMsg m;
      m.frame = r.I64();
      m.player = r.Enum(1, "player");
      const uint32_t n = r.U32();
      if (n > static_cast<uint32_t>(kMaxDof)) throw Malformed{"too many joints"};
      m.action = GetReals(r, n);
      const uint32_t points = r.U32();
      const uint32_t dof = r.U32();
      if (points > kMaxSplinePoints) throw Malformed{"too many spline points"};
      if (dof > static_cast<uint32_t>(kMaxDof)) throw Malformed{"too many joints"};
      if ((points > 0) != (dof > 0)) throw Malformed{"spline shape mismatch"};
      m.spline.points.resize(points);
      for (ControlPoint& p : m.spline.points) {
        p.time = r.F64();
        p.targets = GetReals(r, dof);
      }
      return m;
    }
    case MessageTag::kStateSync: {
      StateSync m;
      m.frame = r.I64();
      m.world = GetWorld(r);
      for (int32_t& s : m.scores) s = r.I32();
      for (Task& t : m.tasks) t = GetTask(r);
      m.phase = static_cast<MatchPhase>(r.Enum(2, "phase"));
      m.winner = r.I32();
      if (m.winner < -1 || m.winner > 1) throw Malformed{"bad winner"};
      m.stalls = r.U64();
      return m;
    }
    case MessageTag::kBye: {
      Bye m;
      m.reason = r.U32();
      return m;
    }
  }
  throw Malformed{"unknown tag"};
}

}  // namespace

std::vector<uint8_t> EncodeMessage(const Message& msg) {
  Writer w;
  w.U32(0);
  w.U8(static_cast<uint8_t>(TagOf(msg)));
  PutPayload(w, msg);
  std::vector<uint8_t>& out = w.bytes();
  const uint32_t len = static_cast<uint32_t>(out.size() - 4);
  for (int i = 0; i < 4; ++i) out[i] = static_cast<uint8_t>(len >> (8 * i));
  return out;
}

DecodeResult DecodeMessage(std::span<const uint8_t> bytes) {
  DecodeResult out;
  if (bytes.size() < 4) return out;
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(bytes[i]) << (8 * i);
  if (len == 0 || len > kMaxPayload) {
    out.status = DecodeStatus::kProtocolError;
    out.error = "bad frame length " + std::to_string(len);
    return out;
  }
  // the tag can be judged before the payload is complete
  if (bytes.size() >= 5) {
    const uint8_t tag = bytes[4];
    if (tag < 1 || tag > 5) {
      out.status = DecodeStatus::kProtocolError;
      out.error = "unknown tag " + std::to_string(tag);
      return out;
    }
  }
  if (bytes.size() - 4 < len) return out;
  const auto tag = static_cast<MessageTag>(bytes[4]);
  Reader r(bytes.subspan(5, len - 1));
  try {
    out.message = GetPayload(tag, r);
    if (!r.done()) throw Malformed{"payload longer than its fields"};
  } catch (const Malformed& e) {
    out.status = DecodeStatus::kProtocolError;
    out.error = std::string(ToString(tag)) + ": " + e.what;
    return out;
  }
  out.status = DecodeStatus::kOk;
  out.consumed = 4 + len;
  return out;
}

void StreamDecoder::Feed(std::span<const uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> StreamDecoder::Next() {
  const DecodeResult r =
      DecodeMessage(std::span<const uint8_t>(buffer_).subspan(offset_));
  switch (r.status) {
    case DecodeStatus::kNeedMoreBytes:
      return std::nullopt;
    case DecodeStatus::kProtocolError:
      throw ProtocolError(r.error);
    case DecodeStatus::kOk:
      break;
  }
  offset_ += r.consumed;
  if (offset_ > (1u << 16) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(offset_));
    offset_ = 0;
  }
  return r.message;
}

uint64_t Fnv1a64(std::span<const uint8_t> bytes, uint64_t h) {
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t HashWorld(const WorldState& world) {
  Writer w;
  PutWorld(w, world);
  return Fnv1a64(w.bytes());
}

bool FrameGuard::Accept(int64_t frame) {
  if (frame < last_) return false;
  last_ = frame;
  return true;
}

// --- transport ---------------------------------------------------------------

namespace {

struct Pipe {
  std::mutex mu;
  std::array<std::deque<uint8_t>, 2> queues;  // queues[i]: bytes for end i
  bool closed = false;
};

class DuplexEnd : public ByteChannel {
 public:
  DuplexEnd(std::shared_ptr<Pipe> pipe, int side) : pipe_(std::move(pipe)), side_(side) {}
  ~DuplexEnd() override { Close(); }

  void Write(std::span<const uint8_t> bytes) override {
    std::lock_guard lock(pipe_->mu);
    if (pipe_->closed) return;
    auto& q = pipe_->queues[1 - side_];
    q.insert(q.end(), bytes.begin(), bytes.end());
  }
  std::vector<uint8_t> ReadAvailable() override {
    std::lock_guard lock(pipe_->mu);
    auto& q = pipe_->queues[side_];
    std::vector<uint8_t> out(q.begin(), q.end());
    q.clear();
    return out;
  }
  bool closed() const override {
    std::lock_guard lock(pipe_->mu);
    return pipe_->closed;
  }
  void Close() override {
    std::lock_guard lock(pipe_->mu);
    pipe_->closed = true;
  }

 private:
  std::shared_ptr<Pipe> pipe_;
  int side_;
};

}  // namespace

std::pair<std::unique_ptr<ByteChannel>, std::unique_ptr<ByteChannel>>
MakeDuplexPair() {
  auto pipe = std::make_shared<Pipe>();
  return {std::make_unique<DuplexEnd>(pipe, 0), std::make_unique<DuplexEnd>(pipe, 1)};
}

Connection::Connection(std::unique_ptr<ByteChannel> channel)
    : channel_(std::move(channel)) {}

void Connection::Send(const Message& msg) { channel_->Write(EncodeMessage(msg)); }

std::vector<Message> Connection::Poll() {
  const std::vector<uint8_t> bytes = channel_->ReadAvailable();
  decoder_.Feed(bytes);
  std::vector<Message> out;
  while (auto m = decoder_.Next()) out.push_back(std::move(*m));
  return out;
}

// --- sync loop ---------------------------------------------------------------

ServerState NewServer(const CharacterModel& model, double separation,
                      uint64_t seed) {
  ServerState s;
  s.match = NewMatch(model, separation, seed);
  return s;
}

ClientState NewClient(const CharacterModel& model, double separation,
                      uint64_t seed) {
  ClientState s;
  s.match = NewMatch(model, separation, seed);
  return s;
}

StateSync MakeStateSync(const ServerState& state) {
  StateSync m;
  m.frame = state.match.frame;
  m.world = state.match.world;
  for (int i = 0; i < 2; ++i) {
    m.scores[i] = state.match.players[i].score;
    m.tasks[i] = state.match.players[i].task;
  }
  m.phase = state.match.phase;
  m.winner = state.match.winner;
  m.stalls = state.stalls;
  return m;
}

void ApplyStateSync(ClientState& state, const StateSync& sync) {
  MatchState& m = state.match;
  m.world = sync.world;
  m.frame = sync.frame;
  for (int i = 0; i < 2; ++i) {
    PlayerState& p = m.players[i];
    p.score = sync.scores[i];
    if (!(p.task == sync.tasks[i])) {
      p.task = sync.tasks[i];
      p.cma.reset();
    }
  }
  m.phase = sync.phase;
  m.winner = sync.winner;
  state.syncs += 1;
  state.sync_hash = HashWorld(m.world);
}

namespace {

bool ActionFits(const CharacterModel& model, const ActionMsg& a) {
  if (a.action.size() != static_cast<size_t>(model.dof())) return false;
  if (!a.spline.points.empty() && a.spline.dof() != model.dof()) return false;
  return std::all_of(a.action.begin(), a.action.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<Message> ServerFrame(const CharacterModel& model, ServerState& state,
                                 const std::vector<Message>& inbox,
                                 const std::vector<Command>& local_commands,
                                 const Config& config) {
  std::vector<Message> out;
  if (state.closed) return out;
  MatchState& match = state.match;
  std::vector<Command> remote;
  std::optional<ActionMsg> action;
  auto fail = [&](ByeReason reason) {
    out.push_back(Bye{static_cast<uint32_t>(reason)});
    state.closed = true;
    return out;
  };
  for (const Message& msg : inbox) {
    if (const auto* m = std::get_if<Hello>(&msg)) {
      if (m->version != kProtocolVersion || m->role != Role::kClient) {
        return fail(ByeReason::kVersionMismatch);
      }
      if (state.handshake) return fail(ByeReason::kProtocolError);
      state.handshake = true;
      out.push_back(Hello{kProtocolVersion, Role::kServer});
      return out;  // frames start once the client has the reply
    } else if (std::holds_alternative<Bye>(msg)) {
      state.closed = true;
      return out;
    } else if (!state.handshake) {
      return fail(ByeReason::kProtocolError);
    } else if (const auto* m = std::get_if<TaskCmd>(&msg)) {
      if (!state.guard.Accept(m->frame) || m->frame > match.frame ||
          m->command.player != kClientPlayer) {
        return fail(ByeReason::kProtocolError);
      }
      remote.push_back(m->command);
    } else if (const auto* m = std::get_if<ActionMsg>(&msg)) {
      if (!state.guard.Accept(m->frame) || m->frame > match.frame ||
          m->player != kClientPlayer || !ActionFits(model, *m)) {
        return fail(ByeReason::kProtocolError);
      }
      if (m->frame == match.frame) action = *m;
    } else {
      return fail(ByeReason::kProtocolError);
    }
  }
  if (!state.handshake) return out;
  if (match.phase != MatchPhase::kRunning) {
    if (!state.bye_sent) {
      out.push_back(Bye{static_cast<uint32_t>(ByeReason::kMatchOver)});
      state.bye_sent = true;
    }
    return out;
  }

  for (const Command& c : local_commands) {
    if (c.player == kServerPlayer) ApplyCommand(model, match, c, config);
  }
  for (const Command& c : remote) ApplyCommand(model, match, c, config);
  UpdateTasks(model, match, config);

  // both sides plan against the opponent's spline of the previous frame
  match.players[kClientPlayer].last_best = state.client_spline;
  const PlanResult plan = PlanPlayer(model, match, kServerPlayer, config);
  std::array<std::vector<double>, 2> actions;
  actions[kServerPlayer] = plan.first_action;
  if (action) {
    actions[kClientPlayer] = action->action;
    if (!action->spline.points.empty()) state.client_spline = action->spline;
  } else {
    actions[kClientPlayer] = model.reference_pose();
    state.stalls += 1;
  }
  match.players[kServerPlayer].last_best = plan.best_spline;
  match.players[kServerPlayer].cma = plan.cma;

  out.push_back(ActionMsg{match.frame, kServerPlayer, plan.first_action, plan.best_spline});
  Advance(model, match, actions, config);
  out.push_back(MakeStateSync(state));
  return out;
}

std::vector<Message> ClientFrame(const CharacterModel& model, ClientState& state,
                                 const std::vector<Message>& inbox,
                                 const std::vector<Command>& local_commands,
                                 const Config& config) {
  std::vector<Message> out;
  if (state.closed) return out;
  MatchState& match = state.match;
  auto fail = [&](ByeReason reason) {
    out.push_back(Bye{static_cast<uint32_t>(reason)});
    state.closed = true;
    return out;
  };
  if (!state.hello_sent) {
    out.push_back(Hello{kProtocolVersion, Role::kClient});
    state.hello_sent = true;
  }
  for (const Message& msg : inbox) {
    if (const auto* m = std::get_if<Hello>(&msg)) {
      if (m->version != kProtocolVersion || m->role != Role::kServer) {
        return fail(ByeReason::kVersionMismatch);
      }
      state.handshake = true;
    } else if (std::holds_alternative<Bye>(msg)) {
      state.closed = true;
      return out;
    } else if (!state.handshake) {
      return fail(ByeReason::kProtocolError);
    } else if (const auto* m = std::get_if<ActionMsg>(&msg)) {
      if (!state.guard.Accept(m->frame) || m->player != kServerPlayer ||
          !ActionFits(model, *m)) {
        return fail(ByeReason::kProtocolError);
      }
      state.server_action = *m;
    } else if (const auto* m = std::get_if<StateSync>(&msg)) {
      if (!state.guard.Accept(m->frame)) return fail(ByeReason::kProtocolError);
      // local prediction of the frame the sync closes, then overwrite
      const bool can_predict = state.server_action &&
                               state.server_action->frame == m->frame - 1 &&
                               match.frame == m->frame - 1 &&
                               !state.last_action.empty() &&
                               match.phase == MatchPhase::kRunning;
      if (can_predict) {
        std::array<std::vector<double>, 2> actions;
        actions[kServerPlayer] = state.server_action->action;
        actions[kClientPlayer] = state.last_action;
        Advance(model, match, actions, config);
      }
      ApplyStateSync(state, *m);
    } else {
      return fail(ByeReason::kProtocolError);
    }
  }
  if (!state.handshake || match.phase != MatchPhase::kRunning) return out;
  if (state.syncs == 0 && match.frame != 0) return out;

  const int64_t frame = match.frame;
  if (state.next_frame > frame) return out;  // already planned this frame
  state.pending.clear();
  for (const Command& c : local_commands) {
    if (c.player != kClientPlayer) continue;
    if (ApplyCommand(model, match, c, config)) {
      state.pending.push_back(c);
      out.push_back(TaskCmd{frame, c});
    }
  }
  UpdateTasks(model, match, config);
  match.players[kServerPlayer].last_best =
      state.server_action && state.server_action->frame == frame - 1
          ? std::optional<ControlSpline>(state.server_action->spline)
          : std::nullopt;
  const PlanResult plan = PlanPlayer(model, match, kClientPlayer, config);
  match.players[kClientPlayer].last_best = plan.best_spline;
  match.players[kClientPlayer].cma = plan.cma;
  state.last_action = plan.first_action;
  state.next_frame = frame + 1;
  out.push_back(ActionMsg{frame, kClientPlayer, plan.first_action, plan.best_spline});
  return out;
}

}  // namespace midctl
