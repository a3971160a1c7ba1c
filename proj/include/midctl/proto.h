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

#ifndef MIDCTL_PROTO_H_
#define MIDCTL_PROTO_H_

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "midctl/game.h"

namespace midctl {

inline constexpr uint32_t kProtocolVersion = 1;
// frames larger than this are rejected before buffering the payload
inline constexpr uint32_t kMaxPayload = 1u << 20;
inline constexpr uint32_t kMaxSplinePoints = 64;

enum class MessageTag : uint8_t {
  kHello = 1,
  kTaskCmd = 2,
  kActionMsg = 3,
  kStateSync = 4,
  kBye = 5,
};

enum class Role : uint8_t { kServer = 0, kClient = 1 };

enum class ByeReason : uint32_t {
  kNormal = 0,
  kVersionMismatch = 1,
  kProtocolError = 2,
  kMatchOver = 3,
};

struct Hello {
  uint32_t version = kProtocolVersion;
  Role role = Role::kClient;
  bool operator==(const Hello&) const = default;
};

struct TaskCmd {
  int64_t frame = 0;
  Command command;
  bool operator==(const TaskCmd&) const = default;
};

struct ActionMsg {
  int64_t frame = 0;
  int player = 0;
  std::vector<double> action;
  ControlSpline spline;
  bool operator==(const ActionMsg&) const = default;
};

struct StateSync {
  int64_t frame = 0;  // frames simulated so far
  WorldState world;
  std::array<int32_t, 2> scores{};
  std::array<Task, 2> tasks;
  MatchPhase phase = MatchPhase::kRunning;
  int32_t winner = -1;
  uint64_t stalls = 0;
  bool operator==(const StateSync&) const = default;
};

struct Bye {
  uint32_t reason = 0;
  bool operator==(const Bye&) const = default;
};

using Message = std::variant<Hello, TaskCmd, ActionMsg, StateSync, Bye>;

MessageTag TagOf(const Message& msg);
const char* ToString(MessageTag tag);

// Frame: u32 LE payload length, u8 tag, payload. Integers little-endian,
// reals as IEEE-754 binary64 bit patterns.
std::vector<uint8_t> EncodeMessage(const Message& msg);

enum class DecodeStatus { kOk, kNeedMoreBytes, kProtocolError };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kNeedMoreBytes;
  Message message;
  size_t consumed = 0;  // bytes of the frame, when kOk
  std::string error;
};

// Decodes the first frame of `bytes`.
DecodeResult DecodeMessage(std::span<const uint8_t> bytes);

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incremental decoder over a byte stream.
class StreamDecoder {
 public:
  void Feed(std::span<const uint8_t> bytes);
  // next complete message; throws ProtocolError on a malformed frame
  std::optional<Message> Next();
  size_t buffered() const { return buffer_.size() - offset_; }

 private:
  std::vector<uint8_t> buffer_;
  size_t offset_ = 0;
};

// Canonical bytes of a world, hashed with 64-bit FNV-1a. Pass a previous
// result as `basis` to continue a hash over more bytes.
inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
uint64_t Fnv1a64(std::span<const uint8_t> bytes, uint64_t basis = kFnvOffsetBasis);
uint64_t HashWorld(const WorldState& world);

// Rejects frame numbers that go backwards.
class FrameGuard {
 public:
  bool Accept(int64_t frame);
  int64_t last() const { return last_; }

 private:
  int64_t last_ = -1;
};

// --- transport -------------------------------------------------------------

// Reliable ordered byte stream.
class ByteChannel {
 public:
  virtual ~ByteChannel() = default;
  virtual void Write(std::span<const uint8_t> bytes) = 0;
  // everything currently available, possibly nothing; never blocks
  virtual std::vector<uint8_t> ReadAvailable() = 0;
  virtual bool closed() const = 0;
  virtual void Close() = 0;
};

// Two connected in-process endpoints.
std::pair<std::unique_ptr<ByteChannel>, std::unique_ptr<ByteChannel>>
MakeDuplexPair();

// Message framing over a channel.
class Connection {
 public:
  explicit Connection(std::unique_ptr<ByteChannel> channel);
  void Send(const Message& msg);
  // all complete messages received so far; throws ProtocolError
  std::vector<Message> Poll();
  ByteChannel& channel() { return *channel_; }

 private:
  std::unique_ptr<ByteChannel> channel_;
  StreamDecoder decoder_;
};

// --- sync loop ---------------------------------------------------------------

// The server simulates authoritatively and plans player 0; the client plans
// player 1 and predicts locally until the next StateSync.
struct ServerState {
  MatchState match;
  bool handshake = false;
  bool closed = false;
  uint64_t stalls = 0;
  FrameGuard guard;
  std::optional<ControlSpline> client_spline;  // latest, used next frame
  bool bye_sent = false;
};

struct ClientState {
  MatchState match;
  bool hello_sent = false;
  bool handshake = false;
  bool closed = false;
  int64_t next_frame = 0;
  uint64_t syncs = 0;
  uint64_t sync_hash = 0;  // world hash right after the last sync
  FrameGuard guard;
  std::vector<double> last_action;             // own action of the pending frame
  std::optional<ActionMsg> server_action;      // server action of that frame
  std::vector<Command> pending;                // own commands of that frame
};

inline constexpr int kServerPlayer = 0;
inline constexpr int kClientPlayer = 1;

// Handles Hello/Bye, client commands and the client's action for the current
// frame, then plans, steps and emits ActionMsg + StateSync. A missing client
// action is replaced by the hold pose and counted as a stall.
std::vector<Message> ServerFrame(const CharacterModel& model, ServerState& state,
                                 const std::vector<Message>& inbox,
                                 const std::vector<Command>& local_commands,
                                 const Config& config);

// Applies the server's action and StateSync of the previous frame (local
// prediction, then overwrite), then plans the next frame and emits ActionMsg
// and TaskCmds for `local_commands`.
std::vector<Message> ClientFrame(const CharacterModel& model, ClientState& state,
                                 const std::vector<Message>& inbox,
                                 const std::vector<Command>& local_commands,
                                 const Config& config);

ClientState NewClient(const CharacterModel& model, double separation,
                      uint64_t seed);
ServerState NewServer(const CharacterModel& model, double separation,
                      uint64_t seed);

StateSync MakeStateSync(const ServerState& state);
// overwrite semantics; resets planner state of players whose task changed
void ApplyStateSync(ClientState& state, const StateSync& sync);

}  // namespace midctl

#endif  // MIDCTL_PROTO_H_
