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


// midctl: headless harness for the duel engine.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "midctl/harness.h"
#include "midctl/net.h"
#include "midctl/proto.h"

namespace midctl {
namespace {

struct Common {
  std::string config_path;
  uint64_t seed = 1;
  int64_t frames = 0;  // 0: keep the configured cap
  double playback_speed = 0.0;

  Settings Load() const {
    Settings s = config_path.empty() ? Settings{} : LoadSettings(config_path);
    if (frames > 0) s.frame_cap = frames;
    if (playback_speed > 0) {
      s.config.playback_speed = playback_speed;
      s.config.Validate();
    }
    return s;
  }
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON settings file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "root seed");
  app->add_option("--frames", c.frames, "frame cap")->check(CLI::PositiveNumber);
  app->add_option("--playback-speed", c.playback_speed, "0.12, 0.16, 0.2 or 1.0")
      ->check(CLI::IsMember({0.12, 0.16, 0.2, 1.0}));
}

// punches that landed on the frame a world closes
std::vector<PunchEvent> LandedNow(const WorldState& world) {
  std::vector<PunchEvent> out;
  for (int i = 0; i < 2; ++i) {
    const PunchSlot& s = world.punches[i];
    if (s.active && s.flag == PunchFlag::kHappenedNow) {
      PunchEvent e;
      e.attacker = i;
      e.hand = s.hand;
      e.target = s.target;
      out.push_back(e);
    }
  }
  return out;
}

// Browser side of an endpoint: forwards syncs and HUD, returns the human's
// commands for `player`.
class Ui {
 public:
  Ui(std::optional<uint16_t> port, int player) : player_(player) {
    if (port) {
      bridge_ = std::make_unique<WebSocketBridge>(*port);
      std::fprintf(stderr, "ui bridge on ws://127.0.0.1:%u/\n", bridge_->port());
    }
  }

  std::vector<Command> Commands() {
    std::vector<Command> out;
    if (!bridge_) return out;
    for (const Message& m : bridge_->Poll()) {
      const auto* cmd = std::get_if<TaskCmd>(&m);
      if (cmd && cmd->command.player == player_) out.push_back(cmd->command);
    }
    for (const std::string& e : bridge_->TakeErrors()) {
      std::fprintf(stderr, "ui: %s\n", e.c_str());
    }
    return out;
  }

  void Show(const CharacterModel& model, const Message& msg, const MatchState& match) {
    if (!bridge_ || !bridge_->connected()) return;
    bridge_->Send(msg);
    if (std::holds_alternative<StateSync>(msg)) {
      bridge_->Send(MakeHud(model, match, LandedNow(match.world)));
    }
  }

  bool active() const { return bridge_ && bridge_->connected(); }

 private:
  int player_;
  std::unique_ptr<WebSocketBridge> bridge_;
};

void PrintJson(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

int RunMatchCmd(const Common& c, const std::string& a, const std::string& b,
                const std::string& trace_path) {
  const Settings s = c.Load();
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw ConfigError(trace_path + ": cannot write");
  }
  const MatchReport r = RunMatch(s, {ParseBotKind(a), ParseBotKind(b)}, c.seed,
                                 trace_path.empty() ? nullptr : &trace);
  PrintJson(ToJson(r));
  return r.aborted ? 1 : 0;
}

int RunReplayCmd(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw ConfigError(trace_path + ": cannot open");
  const ReplayReport r = ReplayTrace(in);
  PrintJson({{"frames", r.frames},
             {"snapshots", r.snapshots},
             {"snapshotMismatches", r.snapshot_mismatches},
             {"recordMismatches", r.record_mismatches},
             {"firstMismatch", r.first_mismatch},
             {"ok", r.ok()}});
  return r.ok() ? 0 : 1;
}

int RunBenchCmd(const Common& c, int frames) {
  const Settings s = c.Load();
  const BenchReport r = RunBenchmark(s, frames, c.seed);
  nlohmann::json j = ToJson(r);
  j["population"] = s.config.population;
  j["cmaUpdates"] = s.config.cma_updates;
  j["rolloutSteps"] = s.config.RolloutSteps();
  PrintJson(j);
  return 0;
}

int RunAblateCmd(const Common& c, int seeds, int frames) {
  const Settings s = c.Load();
  const AblationReport r = RunAblation(s, seeds, frames, c.seed);
  std::printf("%-14s %14s %12s\n", "variant", "mean", "stderr");
  for (const AblationRow& row : r.rows) {
    std::printf("%-14s %14.4f %12.4f\n", row.variant.c_str(), row.mean, row.std_error);
  }
  std::printf("both >= none on %d of %d seeds\n", r.both_beats_none, seeds);
  return 0;
}

using Clock = std::chrono::steady_clock;

Clock::duration FramePeriod(const Config& config) {
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(config.dt / config.playback_speed));
}

int RunServeCmd(const Common& c, const std::string& listen, std::optional<uint16_t> ui_port,
                const std::string& bot_name, int deadline_ms) {
  const Settings s = c.Load();
  const auto [host, port] = ParseHostPort(listen);
  Ui ui(ui_port, kServerPlayer);
  Bot bot(ParseBotKind(bot_name), kServerPlayer, MixSeed(c.seed, 0x100));
  TcpListener listener(host, port);
  std::fprintf(stderr, "waiting for a client on %s:%u\n", host.c_str(), listener.port());
  Connection conn(listener.Accept());

  ServerState state = NewServer(s.model, s.separation, c.seed);
  std::vector<Message> inbox;
  auto next_tick = Clock::now();
  while (!state.closed) {
    for (Message& m : conn.Poll()) inbox.push_back(std::move(m));
    if (conn.channel().closed()) break;
    if (!state.handshake) {
      if (inbox.empty()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        continue;
      }
    } else {
      // wait for the client's action of this frame, up to the deadline
      const int64_t frame = state.match.frame;
      bool have = false;
      for (const Message& m : inbox) {
        const auto* a = std::get_if<ActionMsg>(&m);
        have |= a && a->frame == frame;
      }
      if (!have && Clock::now() < next_tick + std::chrono::milliseconds(deadline_ms)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        continue;
      }
      if (Clock::now() < next_tick) std::this_thread::sleep_until(next_tick);
      next_tick = Clock::now() + FramePeriod(s.config);
    }
    std::vector<Command> local = ui.Commands();
    if (local.empty() && !ui.active() && state.handshake) {
      if (auto cmd = bot.Act(s.model, state.match, s.config)) local.push_back(*cmd);
    }
    const std::vector<Message> out = ServerFrame(s.model, state, inbox, local, s.config);
    inbox.clear();
    for (const Message& m : out) {
      conn.Send(m);
      ui.Show(s.model, m, state.match);
    }
    if (state.match.frame >= s.frame_cap && !state.closed) {
      conn.Send(Bye{static_cast<uint32_t>(ByeReason::kNormal)});
      break;
    }
  }
  const MatchState& m = state.match;
  PrintJson({{"frames", m.frame},
             {"scores", {m.players[0].score, m.players[1].score}},
             {"winner", m.phase == MatchPhase::kFinished ? m.winner : -1},
             {"stalls", state.stalls}});
  return 0;
}

int RunJoinCmd(const Common& c, const std::string& connect, std::optional<uint16_t> ui_port,
               const std::string& bot_name) {
  const Settings s = c.Load();
  const auto [host, port] = ParseHostPort(connect);
  Ui ui(ui_port, kClientPlayer);
  Bot bot(ParseBotKind(bot_name), kClientPlayer, MixSeed(c.seed, 0x101));
  Connection conn(TcpConnect(host, port));

  ClientState state = NewClient(s.model, s.separation, c.seed);
  std::vector<Command> queued;
  uint64_t seen_syncs = 0;
  while (!state.closed) {
    const std::vector<Message> inbox = conn.Poll();
    if (conn.channel().closed() && inbox.empty()) break;
    for (const Command& cmd : ui.Commands()) queued.push_back(cmd);
    const std::vector<Message> out = ClientFrame(s.model, state, inbox, queued, s.config);
    for (const Message& m : out) {
      conn.Send(m);
      if (std::holds_alternative<ActionMsg>(m)) queued.clear();  // consumed by this plan
    }
    for (const Message& m : inbox) ui.Show(s.model, m, state.match);
    if (state.syncs != seen_syncs) {
      seen_syncs = state.syncs;
      if (!ui.active()) {
        if (auto cmd = bot.Act(s.model, state.match, s.config)) queued.push_back(*cmd);
      }
    }
    if (inbox.empty() && out.empty()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  const MatchState& m = state.match;
  PrintJson({{"frames", m.frame},
             {"scores", {m.players[0].score, m.players[1].score}},
             {"syncs", state.syncs},
             {"syncHash", std::to_string(state.sync_hash)}});
  return 0;
}

}  // namespace
}  // namespace midctl

int main(int argc, char** argv) {
  using namespace midctl;
  CLI::App app{"midctl: physically simulated duel driven by middle-level commands"};
  app.require_subcommand(1);
  Common common;

  std::string bot_a = "aggressor", bot_b = "idle", trace;
  CLI::App* match = app.add_subcommand("match", "run a bot-vs-bot match");
  AddCommon(match, common);
  match->add_option("--bot-a", bot_a, "player 0: idle, aggressor, blocker, random");
  match->add_option("--bot-b", bot_b, "player 1: idle, aggressor, blocker, random");
  match->add_option("--trace", trace, "write a JSONL trace here");

  std::string replay_trace;
  CLI::App* replay = app.add_subcommand("replay", "re-simulate a trace and check its hashes");
  replay->add_option("--trace", replay_trace, "trace file")->required()->check(CLI::ExistingFile);

  int bench_frames = 60;
  CLI::App* bench = app.add_subcommand("bench", "plan throughput under the configured budget");
  AddCommon(bench, common);
  bench->add_option("--bench-frames", bench_frames, "frames to time (two plans each)")
      ->check(CLI::PositiveNumber);

  int seeds = 20, ablate_frames = 24;
  CLI::App* ablate = app.add_subcommand("ablate", "compare population seeding variants");
  AddCommon(ablate, common);
  ablate->add_option("--seeds", seeds, "matched seeds")->check(CLI::Range(2, 100000));
  ablate->add_option("--trial-frames", ablate_frames, "frames per task")
      ->check(CLI::PositiveNumber);

  std::string listen = "127.0.0.1:7777", serve_bot = "idle";
  std::optional<uint16_t> serve_ui;
  int deadline_ms = 200;
  CLI::App* serve = app.add_subcommand("serve", "host a networked match and the UI bridge");
  AddCommon(serve, common);
  serve->add_option("--listen", listen, "host:port for the client");
  serve->add_option("--ui-port", serve_ui, "WebSocket port for the browser UI");
  serve->add_option("--bot", serve_bot, "plays player 0 while no browser is connected");
  serve->add_option("--deadline-ms", deadline_ms, "wait for the client's action")
      ->check(CLI::NonNegativeNumber);

  std::string connect = "127.0.0.1:7777", join_bot = "idle";
  std::optional<uint16_t> join_ui;
  CLI::App* join = app.add_subcommand("join", "join a networked match as player 1");
  AddCommon(join, common);
  join->add_option("--connect", connect, "server host:port");
  join->add_option("--ui-port", join_ui, "WebSocket port for the browser UI");
  join->add_option("--bot", join_bot, "plays player 1 while no browser is connected");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*match) return RunMatchCmd(common, bot_a, bot_b, trace);
    if (*replay) return RunReplayCmd(replay_trace);
    if (*bench) return RunBenchCmd(common, bench_frames);
    if (*ablate) return RunAblateCmd(common, seeds, ablate_frames);
    if (*serve) return RunServeCmd(common, listen, serve_ui, serve_bot, deadline_ms);
    if (*join) return RunJoinCmd(common, connect, join_ui, join_bot);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return 3;
  }
  return 0;
}
