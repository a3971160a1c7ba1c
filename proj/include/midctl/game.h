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


#ifndef MIDCTL_GAME_H_
#define MIDCTL_GAME_H_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "midctl/control.h"

namespace midctl {

enum class CommandKind : uint8_t { kSetMove = 0, kSetPunch = 1, kRootMove = 2 };
enum class RootDirection : uint8_t { kStop = 0, kForward = 1, kBack = 2 };

const char* ToString(CommandKind kind);
const char* ToString(RootDirection direction);

struct Command {
  int player = 0;
  CommandKind kind = CommandKind::kRootMove;
  Side hand = Side::kRight;
  Vec2 drag;                              // SetMove, m
  BodyTarget target = BodyTarget::kHead;  // SetPunch
  RootDirection direction = RootDirection::kStop;  // RootMove

  static Command SetMove(int player, Side hand, Vec2 drag);
  static Command SetPunch(int player, Side hand, BodyTarget target);
  static Command RootMove(int player, RootDirection direction);

  bool operator==(const Command&) const = default;
};

enum class MatchPhase : uint8_t { kRunning = 0, kFinished = 1, kAborted = 2 };

struct PlayerState {
  Task task;
  int score = 0;
  std::optional<ControlSpline> last_best;
  std::optional<CmaState> cma;
};

struct MatchState {
  WorldState world;
  std::array<PlayerState, 2> players;
  MatchPhase phase = MatchPhase::kRunning;
  int winner = -1;  // -1 while running, and for a draw
  int64_t frame = 0;
  uint64_t seed = 0;
  std::string diagnostic;  // why the match was aborted
};

enum class Highlight : uint8_t { kNone = 0, kGreen = 1, kRed = 2 };

struct GuideLine {
  bool active = false;
  Side hand = Side::kRight;
  Vec2 from;
  Vec2 to;
  bool operator==(const GuideLine&) const = default;
};

struct HudState {
  std::array<std::vector<Highlight>, 2> parts;  // per character, per bone
  std::array<GuideLine, 2> guides;
  bool operator==(const HudState&) const = default;
};

struct TickResult {
  HudState hud;
  std::vector<PunchEvent> events;
  std::array<std::vector<double>, 2> actions;
  std::array<PlanResult, 2> plans;
};

class GameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

MatchState NewMatch(const CharacterModel& model, double separation,
                    uint64_t seed);

int ScorePunch(const PunchEvent& event);

// Applies one command. Returns false, leaving the match untouched, when the
// match is no longer running or the player id is out of range.
bool ApplyCommand(const CharacterModel& model, MatchState& match,
                  const Command& cmd, const Config& config);

// Completion and timeout rules for the current task of `self`.
Task UpdateTask(const CharacterModel& model, const WorldState& world,
                int self, const Task& task, const Config& config);

// Plans one character against the opponent's previous-frame spline.
PlanResult PlanPlayer(const CharacterModel& model, const MatchState& match,
                      int player, const Config& config);

// Steps the world with both actions, scores events, checks the win
// condition. Divergence aborts the match and keeps the last good world.
std::vector<PunchEvent> Advance(const CharacterModel& model, MatchState& match,
                                const std::array<std::vector<double>, 2>& actions,
                                const Config& config);

// Refreshes tasks (completion, timeout) and resets CMA on task change.
void UpdateTasks(const CharacterModel& model, MatchState& match,
                 const Config& config);

HudState MakeHud(const CharacterModel& model, const MatchState& match,
                 const std::vector<PunchEvent>& events);

// One frame: commands, task refresh, plan both, step, score, HUD.
// Throws GameError when the match is not running.
TickResult Tick(const CharacterModel& model, MatchState& match,
                const std::vector<Command>& commands, const Config& config);

}  // namespace midctl

#endif  // MIDCTL_GAME_H_
