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

#ifndef MIDCTL_SPLINE_H_
#define MIDCTL_SPLINE_H_

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace midctl {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct JointLimit {
  double lo = 0.0;
  double hi = 0.0;
};

struct ControlPoint {
  double time = 0.0;              // s, in [0, horizon]
  std::vector<double> targets;    // rad, one per DOF

  bool operator==(const ControlPoint&) const = default;
};

// Cubic action trajectory over joint-angle targets. Knots are kept sorted and
// at least knot_spacing apart by Canonicalize.
struct ControlSpline {
  std::vector<ControlPoint> points;

  int dof() const {
    return points.empty() ? 0 : static_cast<int>(points.front().targets.size());
  }

  // the spline that holds `pose` with knots spread evenly over the horizon
  static ControlSpline Constant(std::span<const double> pose, int num_points,
                                double horizon);

  bool operator==(const ControlSpline&) const = default;
};

// Flat optimizer vector: for each knot, time followed by targets.
using ParamVector = Eigen::VectorXd;

// Time/target clamping and spacing shared by decode and shift.
struct SplineBounds {
  std::vector<JointLimit> limits;
  double horizon = 0.6;
  double knot_spacing = 1e-3;
};

inline int ParamSize(int num_points, int dof) { return num_points * (dof + 1); }

ParamVector Encode(const ControlSpline& spline);

// throws DimensionError if v.size() != ParamSize(num_points, limits.size())
ControlSpline Decode(const ParamVector& v, int num_points,
                     const SplineBounds& bounds);

// Clamps knot times to [0, horizon], stable-sorts them, enforces the minimum
// spacing, and clamps targets to the joint limits.
void Canonicalize(ControlSpline& spline, const SplineBounds& bounds);

// Catmull-Rom interpolation with duplicated end knots; t outside the knot
// range returns the nearest end knot's targets.
void Evaluate(const ControlSpline& spline, double t, std::span<double> out);
std::vector<double> Evaluate(const ControlSpline& spline, double t);

// Re-bases the spline `delta` seconds later.
ControlSpline Shift(const ControlSpline& spline, double delta,
                    const SplineBounds& bounds);

}  // namespace midctl

#endif  // MIDCTL_SPLINE_H_
