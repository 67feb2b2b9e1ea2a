// Copyright 2026 The balopt Authors
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

#ifndef BALOPT_DESIGNS_HPP
#define BALOPT_DESIGNS_HPP

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "balopt/mixed_opt.hpp"

namespace balopt {

struct CompleteRandomizationSpec {};
struct BlockingSpec {};
struct PairwiseMatchingSpec {
  DistanceMetric metric = DistanceMetric::mahalanobis();
};
struct RerandomizationSpec {
  double acceptance_prob = 0.01;
  int mc_draws = 1000;  // draws behind the empirical threshold quantile
};
struct PureOptimalSpec {
  StructureSpec structure;
  // Enumerate all ties up to this many canonical assignments, then fall back
  // to branch-and-bound (one optimum, randomly permuted).
  std::uint64_t exhaustive_limit = 2000;
  SolveOptions solve;
};
struct MixedOptimalSpec {
  Kernel kernel;
  int t = 5;
  double rho = std::numeric_limits<double>::infinity();
  SolveOptions solve;
  MixedSolveOptions mixed;
};

using DesignVariant =
    std::variant<CompleteRandomizationSpec, BlockingSpec, PairwiseMatchingSpec,
                 RerandomizationSpec, PureOptimalSpec, MixedOptimalSpec>;

struct DesignSpec {
  DesignVariant variant;
  int m = 2;
  std::uint64_t seed = 0;  // randomness consumed while building (thresholds)
};

std::string design_name(const DesignSpec& spec);

struct DesignMeta {
  std::string name;
  double rerand_threshold = std::numeric_limits<double>::quiet_NaN();
  std::string notes;
};

// A finite weighted set of assignments, or a generative sampler, together
// with what is known analytically about its pair statistic. Immutable after
// construction; sampling needs a caller-owned RNG.
class DesignDistribution {
 public:
  static DesignDistribution from_support(DesignSupport support, int m,
                                         DesignMeta meta);
  static DesignDistribution from_sampler(std::function<Assignment(Rng&)> fn,
                                         int n, int m, DesignMeta meta);

  int n() const { return n_; }
  int m() const { return m_; }
  const DesignMeta& meta() const { return meta_; }

  bool has_explicit_support() const { return !support_.empty(); }
  const DesignSupport& support() const;

  bool has_analytic_p() const { return analytic_p_.has_value(); }
  void set_analytic_p(PMatrix p) { analytic_p_ = std::move(p); }

  // Draws an assignment and applies a uniformly random treatment-label
  // permutation, so blinding holds by construction.
  Assignment sample(Rng& rng) const;

  // Exact pair statistic; requires an analytic form or explicit support.
  PMatrix p_matrix() const;

  // Set by rejection samplers that hit their draw cap.
  bool sampler_cap_hit() const;

 private:
  DesignDistribution() = default;
  DesignSupport support_;
  std::vector<double> cumulative_;
  std::function<Assignment(Rng&)> sampler_;
  std::optional<PMatrix> analytic_p_;
  std::shared_ptr<std::atomic<bool>> cap_hit_;
  int n_ = 0;
  int m_ = 2;
  DesignMeta meta_;
};

// Uniform over the m! permutations of one fixed assignment.
DesignDistribution point_mass_design(const Assignment& w);

DesignDistribution build_design(const DesignSpec& spec,
                                const CovariateMatrix& x);

// Empirical acceptance_prob-quantile of the group-wise Mahalanobis metric
// over n_mc complete-randomization draws; +infinity when acceptance_prob = 1.
double rerandomization_threshold(const CovariateMatrix& x,
                                 double acceptance_prob, int n_mc, Rng& rng);

Assignment sample_assignment(const DesignDistribution& design, Rng& rng);

PMatrix p_matrix_of_design(const DesignDistribution& design);

// Monte Carlo estimate for designs without explicit support.
PMatrix estimate_p_matrix(const DesignDistribution& design, int reps,
                          Rng& rng);

double worst_case_ratio(const DesignDistribution& design);

// Algorithm-3 mixed design: support {+u_t, -u_t} weighted theta_t / 2.
DesignDistribution algorithm3_design(const SymMatrix& k, int t, double rho,
                                     const SolveOptions& bb_opts = {},
                                     const MixedSolveOptions& opts = {});

// Algorithm-1 mixed design: the implicit sign-of-Gaussian sampler around the
// relaxed pair statistic.
DesignDistribution algorithm1_design(const SymMatrix& k, double rho,
                                     const MixedSolveOptions& opts = {});

}  // namespace balopt

#endif  // BALOPT_DESIGNS_HPP
