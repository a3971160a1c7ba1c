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

#include "midctl/spline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace midctl {

ControlSpline ControlSpline::Constant(std::span<const double> pose,
                                      int num_points, double horizon) {
  ControlSpline s;
  s.points.resize(num_points);
  for (int i = 0; i < num_points; ++i) {
    s.points[i].time =
        num_points == 1 ? 0.0 : horizon * i / static_cast<double>(num_points - 1);
    s.points[i].targets.assign(pose.begin(), pose.end());
  }
  return s;
}

ParamVector Encode(const ControlSpline& spline) {
  const int dof = spline.dof();
  ParamVector v(ParamSize(static_cast<int>(spline.points.size()), dof));
  int k = 0;
  for (const ControlPoint& p : spline.points) {
    v[k++] = p.time;
    for (double target : p.targets) v[k++] = target;
  }
  return v;
}

ControlSpline Decode(const ParamVector& v, int num_points,
                     const SplineBounds& bounds) {
  const int dof = static_cast<int>(bounds.limits.size());
  if (v.size() != ParamSize(num_points, dof)) {
    throw DimensionError("param vector has length " + std::to_string(v.size()) +
                         ", expected " +
                         std::to_string(ParamSize(num_points, dof)));
  }
  ControlSpline s;
  s.points.resize(num_points);
  int k = 0;
  for (ControlPoint& p : s.points) {
    p.time = v[k++];
    p.targets.resize(dof);
    for (double& target : p.targets) target = v[k++];
  }
  Canonicalize(s, bounds);
  return s;
}

void Canonicalize(ControlSpline& spline, const SplineBounds& bounds) {
  auto& pts = spline.points;
  for (ControlPoint& p : pts) {
    // NaN times land on 0 rather than poisoning the sort
    p.time = std::isnan(p.time) ? 0.0 : std::clamp(p.time, 0.0, bounds.horizon);
    for (size_t j = 0; j < p.targets.size() && j < bounds.limits.size(); ++j) {
      double t = std::isnan(p.targets[j]) ? 0.0 : p.targets[j];
      p.targets[j] = std::clamp(t, bounds.limits[j].lo, bounds.limits[j].hi);
    }
  }
  std::stable_sort(pts.begin(), pts.end(),
                   [](const ControlPoint& a, const ControlPoint& b) {
                     return a.time < b.time;
                   });
  const double eps = bounds.knot_spacing;
  for (size_t i = 1; i < pts.size(); ++i) {
    pts[i].time = std::max(pts[i].time, pts[i - 1].time + eps);
  }
  if (!pts.empty() && pts.back().time > bounds.horizon) {
    pts.back().time = bounds.horizon;
    for (size_t i = pts.size() - 1; i-- > 0;) {
      pts[i].time = std::min(pts[i].time, pts[i + 1].time - eps);
    }
  }
}

namespace {

// finite-difference tangent at knot k; end knots are duplicated
double Tangent(const ControlSpline& s, size_t k, size_t j) {
  const auto& pts = s.points;
  const size_t lo = k == 0 ? 0 : k - 1;
  const size_t hi = k + 1 >= pts.size() ? pts.size() - 1 : k + 1;
  const double dt = pts[hi].time - pts[lo].time;
  if (dt <= 0) return 0.0;
  return (pts[hi].targets[j] - pts[lo].targets[j]) / dt;
}

}  // namespace

void Evaluate(const ControlSpline& spline, double t, std::span<double> out) {
  const auto& pts = spline.points;
  const size_t dof = out.size();
  if (pts.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (pts.size() == 1 || t <= pts.front().time) {
    std::copy_n(pts.front().targets.begin(), dof, out.begin());
    return;
  }
  if (t >= pts.back().time) {
    std::copy_n(pts.back().targets.begin(), dof, out.begin());
    return;
  }
  size_t k = 0;
  while (k + 2 < pts.size() && t >= pts[k + 1].time) ++k;
  const double h = pts[k + 1].time - pts[k].time;
  const double s = (t - pts[k].time) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  for (size_t j = 0; j < dof; ++j) {
    const double p0 = pts[k].targets[j];
    // written around p0 so equal knots reproduce it exactly
    out[j] = p0 + h01 * (pts[k + 1].targets[j] - p0) +
             h * (h10 * Tangent(spline, k, j) + h11 * Tangent(spline, k + 1, j));
  }
}

std::vector<double> Evaluate(const ControlSpline& spline, double t) {
  std::vector<double> out(spline.dof());
  Evaluate(spline, t, out);
  return out;
}

ControlSpline Shift(const ControlSpline& spline, double delta,
                    const SplineBounds& bounds) {
  ControlSpline s = spline;
  for (ControlPoint& p : s.points) p.time = std::max(0.0, p.time - delta);
  Canonicalize(s, bounds);
  return s;
}

}  // namespace midctl
