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

#include "midctl/cmaes.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "midctl/config.h"

namespace midctl {

uint64_t MixSeed(uint64_t a, uint64_t b) {
  // splitmix64 finalizer over the combined words
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CmaState InitCma(int dim, const Eigen::VectorXd& mean, double sigma0,
                 int lambda) {
  if (dim < 1) throw ConfigError("cma: dim must be >= 1");
  if (lambda < 4) throw ConfigError("cma: lambda must be >= 4");
  if (!(sigma0 > 0)) throw ConfigError("cma: sigma0 must be positive");
  if (mean.size() != dim) {
    throw ConfigError("cma: mean has " + std::to_string(mean.size()) +
                      " entries, expected " + std::to_string(dim));
  }
  CmaState s;
  const double n = dim;
  s.dim = dim;
  s.lambda = lambda;
  s.mu = lambda / 2;
  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i) {
    s.weights[i] = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
  }
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  s.c_sigma = (s.mu_eff + 2) / (n + s.mu_eff + 5);
  s.d_sigma = 1 + 2 * std::max(0.0, std::sqrt((s.mu_eff - 1) / (n + 1)) - 1) +
              s.c_sigma;
  s.c_c = (4 + s.mu_eff / n) / (n + 4 + 2 * s.mu_eff / n);
  s.c_1 = 2 / ((n + 1.3) * (n + 1.3) + s.mu_eff);
  s.c_mu = std::min(1 - s.c_1, 2 * (s.mu_eff - 2 + 1 / s.mu_eff) /
                                   ((n + 2) * (n + 2) + s.mu_eff));
  s.chi_n = std::sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n));

  s.mean = mean;
  s.sigma = sigma0;
  s.cov = Eigen::MatrixXd::Identity(dim, dim);
  s.basis = Eigen::MatrixXd::Identity(dim, dim);
  s.scales = Eigen::VectorXd::Ones(dim);
  s.path_sigma = Eigen::VectorXd::Zero(dim);
  s.path_c = Eigen::VectorXd::Zero(dim);
  return s;
}

std::vector<Candidate> Ask(const CmaState& state, uint64_t stream_seed,
                           std::span<const SeedSpec> injected) {
  if (static_cast<int>(injected.size()) > state.lambda) {
    throw std::invalid_argument("cma: more seeds than population");
  }
  std::vector<Candidate> out(state.lambda);
  Eigen::VectorXd z(state.dim);
  for (int i = 0; i < state.lambda; ++i) {
    std::mt19937_64 rng(MixSeed(stream_seed, static_cast<uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < state.dim; ++k) z[k] = normal(rng);
    Candidate& c = out[i];
    if (i < static_cast<int>(injected.size())) {
      const SeedSpec& seed = injected[i];
      c.x = seed.mean + seed.std.cwiseProduct(z);
      c.origin = seed.origin;
    } else {
      c.x = state.mean +
            state.sigma * (state.basis * state.scales.cwiseProduct(z));
      c.origin = CandidateOrigin::kCma;
    }
  }
  return out;
}

std::vector<int> RankByFitness(std::span<const Candidate> population) {
  std::vector<int> order(population.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = population[a].fitness;
    const double fb = population[b].fitness;
    const bool ok_a = std::isfinite(fa);
    const bool ok_b = std::isfinite(fb);
    if (ok_a != ok_b) return ok_a;
    if (!ok_a) return false;
    return fa > fb;
  });
  return order;
}

CmaState Tell(const CmaState& state, std::span<const Candidate> population) {
  if (static_cast<int>(population.size()) != state.lambda) {
    throw std::invalid_argument("cma: population size mismatch");
  }
  CmaState s = state;
  const double n = s.dim;
  const std::vector<int> order = RankByFitness(population);

  Eigen::MatrixXd y(s.dim, s.mu);
  for (int i = 0; i < s.mu; ++i) {
    y.col(i) = (population[order[i]].x - state.mean) / state.sigma;
  }
  const Eigen::VectorXd y_w = y * s.weights;
  s.mean = state.mean + state.sigma * y_w;

  // C^{-1/2} y_w = B D^{-1} B^T y_w
  const Eigen::VectorXd c_inv_sqrt_yw =
      s.basis * (s.basis.transpose() * y_w).cwiseQuotient(s.scales);
  s.path_sigma = (1 - s.c_sigma) * s.path_sigma +
                 std::sqrt(s.c_sigma * (2 - s.c_sigma) * s.mu_eff) *
                     c_inv_sqrt_yw;
  s.generation += 1;
  const double ps_norm = s.path_sigma.norm();
  const double decay =
      std::sqrt(1 - std::pow(1 - s.c_sigma, 2.0 * s.generation));
  const bool h_sigma = ps_norm / decay < (1.4 + 2 / (n + 1)) * s.chi_n;
  s.path_c = (1 - s.c_c) * s.path_c;
  if (h_sigma) {
    s.path_c += std::sqrt(s.c_c * (2 - s.c_c) * s.mu_eff) * y_w;
  }

  const double delta_h = h_sigma ? 0.0 : s.c_c * (2 - s.c_c);
  Eigen::MatrixXd rank_mu = y * s.weights.asDiagonal() * y.transpose();
  s.cov = (1 - s.c_1 - s.c_mu + s.c_1 * delta_h) * state.cov +
          s.c_1 * s.path_c * s.path_c.transpose() + s.c_mu * rank_mu;

  s.sigma = state.sigma *
            std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1));

  // repair: symmetrize, floor eigenvalues, rebuild
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov);
  Eigen::VectorXd values = eig.eigenvalues();
  bool floored = false;
  for (int k = 0; k < s.dim; ++k) {
    if (!(values[k] > kCovarianceFloor)) {
      values[k] = kCovarianceFloor;
      floored = true;
    }
  }
  s.basis = eig.eigenvectors();
  s.scales = values.cwiseSqrt();
  if (floored) {
    s.cov = s.basis * values.asDiagonal() * s.basis.transpose();
    s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  }
  return s;
}

int BestIndex(std::span<const Candidate> population) {
  if (population.empty()) throw std::invalid_argument("cma: empty population");
  return RankByFitness(population).front();
}

const Candidate& BestOf(std::span<const Candidate> population) {
  return population[BestIndex(population)];
}

}  // namespace midctl
