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

#include "midctl/config.h"

#include <string>

namespace midctl {
namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

}  // namespace

void Config::Validate() const {
  Require(dt > 0, "dt must be positive");
  Require(max_task_time > 0, "max_task_time must be positive");
  Require(horizon > 0, "horizon must be positive");
  Require(opponent_horizon > 0, "opponent_horizon must be positive");
  Require(opponent_horizon < horizon, "opponent_horizon must be < horizon");
  Require(cma_updates > 0, "cma_updates must be positive");
  Require(population >= 4, "population must be >= 4");
  Require(last_best_seeds >= 0 && default_pose_seeds >= 0,
          "seed counts must be non-negative");
  Require(last_best_seeds + default_pose_seeds <= population,
          "last_best_seeds + default_pose_seeds must be <= population");
  Require(spline_points >= 2, "spline_points must be >= 2");
  Require(sigma_pose_deg > 0 && sigma_move > 0 && sigma_hand_velocity > 0 &&
              sigma_hand_relax > 0,
          "cost tolerances must be positive");
  Require(punch_desired_speed > 0 && punch_min_speed > 0,
          "punch speeds must be positive");
  Require(knot_spacing > 0 && knot_spacing * spline_points < horizon,
          "knot_spacing must be positive and fit in the horizon");
  Require(seed_time_std_fraction >= 0, "seed_time_std_fraction must be >= 0");
  Require(cma_sigma0 > 0, "cma_sigma0 must be positive");
  Require(cost_scale > 0, "cost_scale must be positive");
  Require(substeps > 0, "substeps must be positive");
  Require(gravity >= 0, "gravity must be non-negative");
  Require(contact_stiffness >= 0 && contact_damping >= 0,
          "contact parameters must be non-negative");
  Require(root_speed >= 0, "root_speed must be non-negative");
  Require(win_score > 0, "win_score must be positive");
  Require(punch_relax_factor > 0, "punch_relax_factor must be positive");
  Require(playback_speed == 0.12 || playback_speed == 0.16 ||
              playback_speed == 0.2 || playback_speed == 1.0,
          "playback_speed must be one of 0.12, 0.16, 0.2, 1.0");
}

}  // namespace midctl
