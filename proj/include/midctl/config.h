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

#ifndef MIDCTL_CONFIG_H_
#define MIDCTL_CONFIG_H_

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace midctl {

// raised for invalid sizes, hyperparameters, or config files
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All tunables of the controller, simulator and match. Defaults are the
// published algorithm parameters plus the constants this engine decides.
struct Config {
  // planning
  double dt = 1.0 / 30.0;                 // s
  double max_task_time = 0.5;             // s
  double horizon = 0.6;                   // s
  double opponent_horizon = 0.15;         // s
  int cma_updates = 4;
  int population = 16;
  int last_best_seeds = 3;
  int default_pose_seeds = 3;
  int spline_points = 3;
  double sigma_pose_deg = 20.0;           // deg
  double sigma_move = 0.02;               // m
  double sigma_hand_velocity = 2.5;       // m/s
  double sigma_hand_relax = 0.01;         // m

  // decided constants
  double punch_desired_speed = 3.0;       // m/s
  double punch_min_speed = 0.5;           // m/s
  double knot_spacing = 1e-3;             // s
  double seed_time_std_fraction = 0.1;    // of horizon
  double cma_sigma0 = 1.5;
  bool seed_exact_mean = true;            // first seed of each group unperturbed
  bool use_last_best_seeds = true;
  bool use_default_pose_seeds = true;
  double cost_scale = 1.0;                // uniform multiplier on all costs
  bool gravity_compensation = true;       // PD adds gravity feedforward
  bool shift_cma_mean = true;             // advance a carried-over mean by dt
  bool rollout_return_phase = false;      // score return phase of predicted hits

  // simulation
  int substeps = 10;
  double gravity = 9.81;                  // m/s^2
  double contact_stiffness = 2000.0;      // N/m
  double contact_damping = 50.0;          // N s/m
  double root_speed = 0.3;                // m/s

  // match
  int win_score = 100;
  double punch_relax_factor = 4.0;        // x sigma_hand_relax
  double playback_speed = 1.0;

  double SigmaPoseRad() const {
    return sigma_pose_deg * std::numbers::pi / 180.0;
  }

  // number of dt steps covering the planning horizon
  int RolloutSteps() const {
    double n = horizon / dt;
    double r = std::round(n);
    if (std::abs(n - r) < 1e-9) return static_cast<int>(r);
    return static_cast<int>(std::ceil(n));
  }

  // throws ConfigError on the first violated constraint
  void Validate() const;
};

}  // namespace midctl

#endif  // MIDCTL_CONFIG_H_
