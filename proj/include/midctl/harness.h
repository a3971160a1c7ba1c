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


#ifndef MIDCTL_HARNESS_H_
#define MIDCTL_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "midctl/game.h"

namespace midctl {

// Everything a run needs besides the seed: planner/simulator config, the
// character model and match set-up.
struct Settings {
  Config config;
  CharacterModel model = CharacterModel::Default();
  double separation = 1.0;   // root distance at the start, m
  int64_t frame_cap = 10000;
  int snapshot_every = 30;   // frames between world snapshots in traces
};

// Config file: {"config": {...}, "model": {...}, "match": {...}}, every
// section and key optional. Keys mirror the C++ field names. Unknown keys
// and wrong types throw ConfigError naming the file, path and field.
Settings LoadSettings(const std::string& path);
Settings SettingsFromJson(const nlohmann::json& j, const std::string& source);
nlohmann::json SettingsToJson(const Settings& settings);

nlohmann::json ConfigToJson(const Config& config);
// overlays the keys present in `j` onto `config`
void ConfigFromJson(const nlohmann::json& j, Config& config, const std::string& where);

// --- bots --------------------------------------------------------------------

enum class BotKind { kIdle, kAggressor, kBlocker, kRandom };

const char* ToString(BotKind kind);
// throws ConfigError for unknown names
BotKind ParseBotKind(std::string_view name);

// Scripted player. Emits at most one command per frame.
class Bot {
 public:
  Bot(BotKind kind, int player, uint64_t seed);

  std::optional<Command> Act(const CharacterModel& model, const MatchState& match,
                             const Config& config);
  BotKind kind() const { return kind_; }

 private:
  std::optional<Command> Aggress(const CharacterModel& model, const MatchState& match);
  std::optional<Command> Block(const CharacterModel& model, const MatchState& match);
  std::optional<Command> Wander(const CharacterModel& model, const MatchState& match);

  BotKind kind_;
  int player_;
  std::mt19937_64 rng_;
};

// --- matches and traces ------------------------------------------------------

struct MatchReport {
  int winner = -1;              // -1: none
  int64_t frames = 0;
  int punches = 0;
  std::array<int, 2> scores{};
  std::array<int, 2> landed{};  // punches per player
  int tasks_completed = 0;
  int tasks_timed_out = 0;
  double task_success_rate = 0.0;  // completed / (completed + timed out)
  bool aborted = false;
  std::string diagnostic;
  uint64_t trace_hash = 0;      // FNV-1a over every trace line
};

nlohmann::json ToJson(const MatchReport& report);

// Runs bots[0] vs bots[1] until a win, an abort or the frame cap. Writes one
// JSON record per line to `trace` when given; the hash covers the same text.
MatchReport RunMatch(const Settings& settings, std::array<BotKind, 2> bots,
                     uint64_t seed, std::ostream* trace);

struct ReplayReport {
  int64_t frames = 0;
  int snapshots = 0;
  int snapshot_mismatches = 0;
  int record_mismatches = 0;
  int64_t first_mismatch = -1;
  bool ok() const { return snapshot_mismatches == 0 && record_mismatches == 0; }
};

// Re-simulates a trace from its header and recorded commands; checks every
// snapshot hash and every record. Throws ConfigError on unreadable traces.
ReplayReport ReplayTrace(std::istream& trace);

// --- benchmark and ablation ----------------------------------------------------

struct BenchReport {
  int plans = 0;
  double seconds = 0.0;
  double plans_per_second = 0.0;
  int rollouts_per_plan = 0;
  int64_t world_steps_per_plan = 0;
  double world_steps_per_second = 0.0;
};

nlohmann::json ToJson(const BenchReport& report);

// Times plan() in an aggressor-vs-idle match for `frames` frames (two plans
// per frame).
BenchReport RunBenchmark(const Settings& settings, int frames, uint64_t seed);

struct AblationRow {
  std::string variant;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> per_seed;  // mean best fitness per frame
};

struct AblationReport {
  std::vector<AblationRow> rows;  // none, last-best, default-pose, both
  int both_beats_none = 0;        // seeds where both >= none
};

// Randomized Move tasks, one per seed, planned for `frames` frames with
// each seeding variant on identical tasks and random streams.
AblationReport RunAblation(const Settings& settings, int seeds, int frames,
                           uint64_t seed);

// --- single-character trials ---------------------------------------------------

struct MoveTrial {
  bool success = false;
  int frames = 0;           // frames simulated
  double best_distance = 0; // closest hand-to-target distance, m
};

// A reachable target 20 cm from the guard position of one hand; the opponent
// holds its pose. Succeeds when the hand gets within `tolerance`.
MoveTrial RunMoveTrial(const Settings& settings, uint64_t seed, double tolerance,
                       int max_frames);

// the target RunMoveTrial uses for `seed`
Task MoveTrialTask(const CharacterModel& model, const WorldState& world, uint64_t seed,
                   double distance);

struct PunchTrial {
  bool landed = false;
  int frames = 0;
  double power = 0.0;
  int score = 0;
  Side hand = Side::kLeft;
  BodyTarget target = BodyTarget::kHead;
};

// Hand and target alternate with the trial index; the opponent holds its pose.
PunchTrial RunPunchTrial(const Settings& settings, int trial, double separation,
                         int max_frames);

}  // namespace midctl

#endif  // MIDCTL_HARNESS_H_
