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

#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

namespace midctl {
namespace {

std::vector<uint8_t> Bytes(std::initializer_list<int> v) {
  return std::vector<uint8_t>(v.begin(), v.end());
}

double AnyReal(std::mt19937_64& rng, bool bits) {
  if (bits) return std::bit_cast<double>(rng());
  return std::uniform_real_distribution<double>(-10, 10)(rng);
}

WorldState RandomWorld(std::mt19937_64& rng, bool bits) {
  WorldState w;
  const int n = static_cast<int>(rng() % 7);
  for (CharacterState& c : w.characters) {
    c.root_x = AnyReal(rng, bits);
    c.root_vx = AnyReal(rng, bits);
    c.facing = rng() % 2 ? 1 : -1;
    for (int d = 0; d < n; ++d) {
      c.q.push_back(AnyReal(rng, bits));
      c.qdot.push_back(AnyReal(rng, bits));
    }
  }
  w.clock = AnyReal(rng, bits);
  for (PunchSlot& s : w.punches) {
    s.active = rng() % 2;
    s.hand = static_cast<Side>(rng() % 2);
    s.target = static_cast<BodyTarget>(rng() % 2);
    s.flag = static_cast<PunchFlag>(rng() % 3);
  }
  return w;
}

Task RandomTask(std::mt19937_64& rng, bool bits) {
  Task t;
  t.kind = static_cast<TaskKind>(rng() % 3);
  t.hand = static_cast<Side>(rng() % 2);
  t.move_target = {AnyReal(rng, bits), AnyReal(rng, bits)};
  t.punch_target = static_cast<BodyTarget>(rng() % 2);
  t.started_at = AnyReal(rng, bits);
  t.punch_flag = static_cast<PunchFlag>(rng() % 3);
  return t;
}

Message RandomMessage(std::mt19937_64& rng, bool bits) {
  switch (rng() % 5) {
    case 0:
      return Hello{static_cast<uint32_t>(rng()), static_cast<Role>(rng() % 2)};
    case 1: {
      Command c;
      c.player = static_cast<int>(rng() % 2);
      c.kind = static_cast<CommandKind>(rng() % 3);
      c.hand = static_cast<Side>(rng() % 2);
      c.drag = {AnyReal(rng, bits), AnyReal(rng, bits)};
      c.target = static_cast<BodyTarget>(rng() % 2);
      c.direction = static_cast<RootDirection>(rng() % 3);
      return TaskCmd{static_cast<int64_t>(rng()), c};
    }
    case 2: {
      ActionMsg a;
      a.frame = static_cast<int64_t>(rng());
      a.player = static_cast<int>(rng() % 2);
      const int n = 1 + static_cast<int>(rng() % 6);
      for (int d = 0; d < n; ++d) a.action.push_back(AnyReal(rng, bits));
      const int points = static_cast<int>(rng() % 4);
      for (int k = 0; k < points; ++k) {
        ControlPoint p;
        p.time = AnyReal(rng, bits);
        for (int d = 0; d < n; ++d) p.targets.push_back(AnyReal(rng, bits));
        a.spline.points.push_back(p);
      }
      return a;
    }
    case 3: {
      StateSync s;
      s.frame = static_cast<int64_t>(rng());
      s.world = RandomWorld(rng, bits);
      s.scores = {static_cast<int32_t>(rng()), static_cast<int32_t>(rng())};
      s.tasks = {RandomTask(rng, bits), RandomTask(rng, bits)};
      s.phase = static_cast<MatchPhase>(rng() % 3);
      s.winner = static_cast<int32_t>(rng() % 3) - 1;
      s.stalls = rng();
      return s;
    }
    default:
      return Bye{static_cast<uint32_t>(rng())};
  }
}

TEST_CASE("bye wire bytes") {
  CHECK(EncodeMessage(Bye{0}) == Bytes({5, 0, 0, 0, 5, 0, 0, 0, 0}));
  CHECK(EncodeMessage(Bye{0x01020304}) == Bytes({5, 0, 0, 0, 5, 4, 3, 2, 1}));
  CHECK(EncodeMessage(Hello{1, Role::kClient}) == Bytes({6, 0, 0, 0, 1, 1, 0, 0, 0, 1}));
}

TEST_CASE("reals travel as binary64 little endian") {
  ActionMsg a;
  a.frame = 2;
  a.player = 1;
  a.action = {1.0};
  const auto b = EncodeMessage(a);
  // length, tag, frame(8), player(1), count(4), 1.0, points(4), dof(4)
  REQUIRE(b.size() == 4 + 1 + 8 + 1 + 4 + 8 + 4 + 4);
  CHECK(b[5] == 2);
  CHECK(b[13] == 1);
  CHECK(b[14] == 1);
  const std::vector<uint8_t> one(b.begin() + 18, b.begin() + 26);
  CHECK(one == Bytes({0, 0, 0, 0, 0, 0, 0xf0, 0x3f}));
}

TEST_CASE("decode status") {
  CHECK(DecodeMessage({}).status == DecodeStatus::kNeedMoreBytes);
  const auto bye = EncodeMessage(Bye{7});
  for (size_t n = 0; n < bye.size(); ++n) {
    CHECK(DecodeMessage(std::span(bye).first(n)).status == DecodeStatus::kNeedMoreBytes);
  }
  const DecodeResult ok = DecodeMessage(bye);
  CHECK(ok.status == DecodeStatus::kOk);
  CHECK(ok.consumed == bye.size());
  CHECK(std::get<Bye>(ok.message).reason == 7);

  CHECK(DecodeMessage(Bytes({1, 0, 0, 0, 9})).status == DecodeStatus::kProtocolError);
  CHECK(DecodeMessage(Bytes({1, 0, 0, 0, 0})).status == DecodeStatus::kProtocolError);
  CHECK(DecodeMessage(Bytes({0, 0, 0, 0})).status == DecodeStatus::kProtocolError);
  CHECK(DecodeMessage(Bytes({0, 0, 0, 0x10, 5})).status == DecodeStatus::kProtocolError);
  // length disagrees with the payload
  CHECK(DecodeMessage(Bytes({6, 0, 0, 0, 5, 0, 0, 0, 0, 0})).status ==
        DecodeStatus::kProtocolError);
  CHECK(DecodeMessage(Bytes({4, 0, 0, 0, 5, 0, 0, 0})).status ==
        DecodeStatus::kProtocolError);
  // enum out of range
  CHECK(DecodeMessage(Bytes({6, 0, 0, 0, 1, 1, 0, 0, 0, 2})).status ==
        DecodeStatus::kProtocolError);
}

TEST_CASE("random state syncs round trip bit-exactly") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    StateSync s;
    s.frame = static_cast<int64_t>(rng() >> 1);
    s.world = RandomWorld(rng, false);
    s.scores = {static_cast<int32_t>(rng() % 200), static_cast<int32_t>(rng() % 200)};
    s.tasks = {RandomTask(rng, false), RandomTask(rng, false)};
    s.stalls = rng() % 10;
    const auto bytes = EncodeMessage(s);
    const DecodeResult r = DecodeMessage(bytes);
    REQUIRE(r.status == DecodeStatus::kOk);
    CHECK(std::get<StateSync>(r.message) == s);
  }
  // arbitrary bit patterns, NaN payloads included
  for (int i = 0; i < 1000; ++i) {
    const Message m = RandomMessage(rng, true);
    const auto bytes = EncodeMessage(m);
    const DecodeResult r = DecodeMessage(bytes);
    REQUIRE(r.status == DecodeStatus::kOk);
    CHECK(r.message.index() == m.index());
    CHECK(EncodeMessage(r.message) == bytes);
  }
}

TEST_CASE("every message kind round trips") {
  std::mt19937_64 rng(2);
  std::map<size_t, int> seen;
  for (int i = 0; i < 200; ++i) {
    const Message m = RandomMessage(rng, false);
    const DecodeResult r = DecodeMessage(EncodeMessage(m));
    REQUIRE(r.status == DecodeStatus::kOk);
    CHECK(r.message == m);
    seen[m.index()] += 1;
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("stream decoder reassembles split frames") {
  std::mt19937_64 rng(3);
  std::vector<Message> sent;
  std::vector<uint8_t> stream;
  for (int i = 0; i < 50; ++i) {
    sent.push_back(RandomMessage(rng, false));
    const auto b = EncodeMessage(sent.back());
    stream.insert(stream.end(), b.begin(), b.end());
  }
  StreamDecoder d;
  std::vector<Message> got;
  size_t pos = 0;
  while (pos < stream.size()) {
    const size_t n = std::min<size_t>(1 + rng() % 37, stream.size() - pos);
    d.Feed(std::span(stream).subspan(pos, n));
    pos += n;
    while (auto m = d.Next()) got.push_back(*m);
  }
  CHECK(got == sent);
  CHECK(d.buffered() == 0);

  StreamDecoder bad;
  bad.Feed(Bytes({3, 0, 0, 0, 42, 0, 0}));
  CHECK_THROWS_AS(bad.Next(), ProtocolError);
}

TEST_CASE("fuzzed frames never crash") {
  std::mt19937_64 rng(4);
  int ok = 0;
  int errors = 0;
  int partial = 0;
  for (int i = 0; i < 1000000; ++i) {
    std::vector<uint8_t> b;
    switch (i % 3) {
      case 0: {  // noise behind a plausible header
        const uint32_t len = static_cast<uint32_t>(rng() % 64);
        b = {static_cast<uint8_t>(len), 0, 0, 0, static_cast<uint8_t>(1 + rng() % 6)};
        for (uint32_t k = 1; k < len; ++k) b.push_back(static_cast<uint8_t>(rng()));
        break;
      }
      case 1: {  // valid frame with flipped bytes
        b = EncodeMessage(RandomMessage(rng, true));
        const int flips = 1 + static_cast<int>(rng() % 3);
        for (int k = 0; k < flips; ++k) b[rng() % b.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
        break;
      }
      default: {  // truncated or padded valid frame
        b = EncodeMessage(RandomMessage(rng, true));
        if (rng() % 2) {
          b.resize(rng() % b.size());
        } else {
          b.push_back(static_cast<uint8_t>(rng()));
        }
      }
    }
    const DecodeResult r = DecodeMessage(b);
    if (r.status == DecodeStatus::kOk) {
      ++ok;
      REQUIRE(r.consumed <= b.size());
      // canonical: what parses re-encodes to the same bytes
      REQUIRE(EncodeMessage(r.message) ==
              std::vector<uint8_t>(b.begin(), b.begin() + static_cast<long>(r.consumed)));
    } else if (r.status == DecodeStatus::kProtocolError) {
      ++errors;
    } else {
      ++partial;
    }
  }
  CHECK(ok > 0);
  CHECK(errors > 0);
  CHECK(partial > 0);
}

TEST_CASE("fnv-1a 64 reference values") {
  auto h = [](const std::string& s) {
    return Fnv1a64(std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
  };
  CHECK(h("") == 0xcbf29ce484222325ull);
  CHECK(h("a") == 0xaf63dc4c8601ec8cull);
  CHECK(h("foobar") == 0x85944171f73967e8ull);

  const CharacterModel m = CharacterModel::Default();
  WorldState w = InitialWorld(m, 1.0);
  const uint64_t base = HashWorld(w);
  CHECK(HashWorld(w) == base);
  w.characters[1].q[3] = std::nextafter(w.characters[1].q[3], 10.0);
  CHECK(HashWorld(w) != base);
}

TEST_CASE("frame guard rejects going backwards") {
  FrameGuard g;
  CHECK(g.Accept(0));
  CHECK(g.Accept(0));
  CHECK(g.Accept(5));
  CHECK_FALSE(g.Accept(4));
  CHECK(g.Accept(6));
  CHECK(g.last() == 6);
}

TEST_CASE("duplex pair carries messages both ways") {
  auto [a, b] = MakeDuplexPair();
  Connection ca(std::move(a));
  Connection cb(std::move(b));
  ca.Send(Hello{1, Role::kClient});
  ca.Send(Bye{3});
  cb.Send(Bye{9});
  const auto at_b = cb.Poll();
  REQUIRE(at_b.size() == 2);
  CHECK(std::get<Hello>(at_b[0]).role == Role::kClient);
  CHECK(std::get<Bye>(at_b[1]).reason == 3);
  const auto at_a = ca.Poll();
  REQUIRE(at_a.size() == 1);
  CHECK(cb.Poll().empty());
  ca.channel().Close();
  CHECK(cb.channel().closed());
}

// Client and server over an in-process wire.
struct Loopback {
  const CharacterModel& model;
  Config config;
  ServerState server;
  ClientState client;
  Connection at_server;
  Connection at_client;
  int checked_syncs = 0;
  bool hashes_match = true;

  Loopback(const CharacterModel& m, uint64_t seed, std::pair<std::unique_ptr<ByteChannel>,
                                                             std::unique_ptr<ByteChannel>> pipe)
      : model(m),
        server(NewServer(m, 1.0, seed)),
        client(NewClient(m, 1.0, seed)),
        at_server(std::move(pipe.first)),
        at_client(std::move(pipe.second)) {}

  // one client step then one server step; `drop` discards the client's
  // ActionMsg on its way
  void Step(const std::vector<Command>& server_cmds,
            const std::vector<Command>& client_cmds, bool drop = false) {
    const uint64_t syncs = client.syncs;
    for (const Message& m : ClientFrame(model, client, at_client.Poll(), client_cmds, config)) {
      if (drop && std::holds_alternative<ActionMsg>(m)) continue;
      at_client.Send(m);
    }
    if (client.syncs > syncs) {
      ++checked_syncs;
      hashes_match = hashes_match && client.sync_hash == HashWorld(server.match.world);
    }
    for (const Message& m : ServerFrame(model, server, at_server.Poll(), server_cmds, config)) {
      at_server.Send(m);
    }
  }
};

Loopback MakeLoop(const CharacterModel& m, uint64_t seed) {
  return Loopback(m, seed, MakeDuplexPair());
}

TEST_CASE("handshake, then lockstep frames with matching hashes") {
  const CharacterModel m = CharacterModel::Default();
  Loopback loop = MakeLoop(m, 5);
  loop.Step({}, {});
  CHECK(loop.server.handshake);
  CHECK(loop.server.match.frame == 0);
  loop.Step({}, {});
  CHECK(loop.client.handshake);
  CHECK(loop.server.match.frame == 1);
  CHECK(loop.server.stalls == 0);

  // the same commands through a local match give the same world
  MatchState local = NewMatch(m, 1.0, 5);
  std::vector<std::vector<Command>> script(40);
  script[3] = {Command::SetPunch(1, Side::kLeft, BodyTarget::kHead)};
  script[8] = {Command::SetMove(0, Side::kRight, {0.05, 0.1})};
  script[15] = {Command::RootMove(1, RootDirection::kForward)};
  script[25] = {Command::RootMove(1, RootDirection::kStop),
                Command::SetPunch(0, Side::kLeft, BodyTarget::kChest)};
  Tick(m, local, {}, loop.config);
  for (int f = 1; f < 40; ++f) {
    std::vector<Command> s;
    std::vector<Command> c;
    for (const Command& cmd : script[f]) (cmd.player == 0 ? s : c).push_back(cmd);
    loop.Step(s, c);
    std::vector<Command> both = s;
    both.insert(both.end(), c.begin(), c.end());
    Tick(m, local, both, loop.config);
  }
  CHECK(loop.hashes_match);
  CHECK(loop.checked_syncs == 39);
  CHECK(loop.server.stalls == 0);
  CHECK(loop.server.match.frame == 40);
  CHECK(loop.server.match.world == local.world);
  CHECK(loop.server.match.players[1].task == local.players[1].task);
}

TEST_CASE("perturbed client state is overwritten by the next sync") {
  const CharacterModel m = CharacterModel::Default();
  Loopback loop = MakeLoop(m, 6);
  for (int i = 0; i < 5; ++i) loop.Step({}, {});
  loop.client.match.world.characters[1].q[2] += 1e-9;
  CHECK(HashWorld(loop.client.match.world) != HashWorld(loop.server.match.world));
  const int before = loop.checked_syncs;
  loop.Step({}, {});
  CHECK(loop.checked_syncs == before + 1);
  CHECK(HashWorld(loop.client.match.world) == loop.client.sync_hash);
  CHECK(loop.hashes_match);
}

TEST_CASE("a dropped action stalls one frame but the world advances") {
  const CharacterModel m = CharacterModel::Default();
  Loopback loop = MakeLoop(m, 7);
  for (int i = 0; i < 4; ++i) loop.Step({}, {});
  const int64_t before = loop.server.match.frame;
  loop.Step({}, {}, true);
  CHECK(loop.server.match.frame == before + 1);
  CHECK(loop.server.stalls == 1);
  for (int i = 0; i < 4; ++i) loop.Step({}, {});
  CHECK(loop.server.stalls == 1);
  CHECK(loop.client.match.frame == loop.server.match.frame - 1);
  CHECK(loop.hashes_match);
}

TEST_CASE("version mismatch and out-of-order frames end the session") {
  const CharacterModel m = CharacterModel::Default();
  const Config c;
  ServerState s = NewServer(m, 1.0, 0);
  auto out = ServerFrame(m, s, {Hello{2, Role::kClient}}, {}, c);
  REQUIRE(out.size() == 1);
  CHECK(std::get<Bye>(out[0]).reason == static_cast<uint32_t>(ByeReason::kVersionMismatch));
  CHECK(s.closed);
  CHECK(ServerFrame(m, s, {}, {}, c).empty());

  ServerState t = NewServer(m, 1.0, 0);
  ServerFrame(m, t, {Hello{}}, {}, c);
  const Command cmd = Command::RootMove(1, RootDirection::kStop);
  out = ServerFrame(m, t, {TaskCmd{0, cmd}}, {}, c);
  CHECK(t.match.frame == 1);
  out = ServerFrame(m, t, {TaskCmd{1, cmd}, TaskCmd{0, cmd}}, {}, c);
  REQUIRE(!out.empty());
  CHECK(std::get<Bye>(out.back()).reason == static_cast<uint32_t>(ByeReason::kProtocolError));
  CHECK(t.closed);

  // messages before the handshake are a protocol error too
  ClientState cl = NewClient(m, 1.0, 0);
  out = ClientFrame(m, cl, {Bye{0}}, {}, c);
  CHECK(cl.closed);
  ClientState c2 = NewClient(m, 1.0, 0);
  out = ClientFrame(m, c2, {StateSync{}}, {}, c);
  CHECK(std::holds_alternative<Bye>(out.back()));
}

}  // namespace
}  // namespace midctl
