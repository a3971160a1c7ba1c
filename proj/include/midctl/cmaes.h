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

#ifndef MIDCTL_CMAES_H_
#define MIDCTL_CMAES_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace midctl {

enum class CandidateOrigin { kCma, kLastBestSeed, kDefaultPoseSeed };

struct Candidate {
  Eigen::VectorXd x;
  double fitness = 0.0;  // higher is better
  CandidateOrigin origin = CandidateOrigin::kCma;
};

// An externally constructed sample: x ~ mean + std .* N(0, I).
struct SeedSpec {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  CandidateOrigin origin = CandidateOrigin::kLastBestSeed;
};

// Sampling distribution of a (mu/mu_w, lambda)-CMA-ES with rank-one and
// rank-mu covariance updates and cumulative step-size adaptation.
struct CmaState {
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;  // positive, sum to one
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;  // E||N(0, I)||

  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd basis;    // eigenvectors of cov
  Eigen::VectorXd scales;   // sqrt of eigenvalues of cov
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  int64_t generation = 0;
};

// minimum eigenvalue kept in the covariance after each update
inline constexpr double kCovarianceFloor = 1e-12;

// throws ConfigError unless dim >= 1, lambda >= 4, sigma0 > 0 and mean has
// dim entries
CmaState InitCma(int dim, const Eigen::VectorXd& mean, double sigma0,
                 int lambda);

// Samples lambda candidates: seeds first (in order), the rest from
// N(mean, sigma^2 C). Candidate i draws from a stream derived from
// (stream_seed, i).
std::vector<Candidate> Ask(const CmaState& state, uint64_t stream_seed,
                           std::span<const SeedSpec> injected);

// Ranks by fitness (descending, non-finite last, ties by index) and updates
// mean, paths, step size and covariance.
CmaState Tell(const CmaState& state, std::span<const Candidate> population);

// index of the maximal-fitness candidate, ties to the lowest index; throws
// std::invalid_argument on an empty population
int BestIndex(std::span<const Candidate> population);
const Candidate& BestOf(std::span<const Candidate> population);

// ranking used by Tell: indices sorted best-first
std::vector<int> RankByFitness(std::span<const Candidate> population);

uint64_t MixSeed(uint64_t a, uint64_t b);

}  // namespace midctl

#endif  // MIDCTL_CMAES_H_
