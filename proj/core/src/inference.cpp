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

#include "balopt/inference.hpp"

#include <cmath>

namespace balopt {

void OutcomeTable::validate() const {
  if (observed.size() != assignment.n()) {
    throw Error(ErrorCode::kInput, "inference",
                "one observed outcome per subject is required");
  }
  if (!observed.allFinite()) {
    throw Error(ErrorCode::kInput, "inference", "outcomes must be finite");
  }
}

double mean_difference(const OutcomeTable& outcomes, int k, int k_prime) {
  outcomes.validate();
  const Assignment& w = outcomes.assignment;
  double sum_k = 0.0, sum_kp = 0.0;
  int n_k = 0, n_kp = 0;
  for (int i = 0; i < w.n(); ++i) {
    if (w.label(i) == k) {
      sum_k += outcomes.observed(i);
      ++n_k;
    } else if (w.label(i) == k_prime) {
      sum_kp += outcomes.observed(i);
      ++n_kp;
    }
  }
  if (n_k == 0 || n_kp == 0) {
    throw Error(ErrorCode::kInput, "inference", "empty treatment group");
  }
  return sum_k / n_k - sum_kp / n_kp;
}

namespace {

double statistic_under(const Assignment& w, const Vector& observed) {
  const int p = w.p();
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < w.n(); ++i) {
    if (w.label(i) == 1) s1 += observed(i);
    if (w.label(i) == 2) s2 += observed(i);
  }
  return s1 / p - s2 / p;
}

TestResult finish_mc(double estimate, int exceed, int t, double alpha) {
  TestResult result;
  result.estimate = estimate;
  result.replicates = t;
  result.alpha = alpha;
  result.p_value = (1.0 + exceed) / (1.0 + t);
  result.reject = result.p_value <= alpha;
  return result;
}

}  // namespace

TestResult bootstrap_test(const CovariateMatrix& x, const DesignSpec& design,
                          const OutcomeTable& outcomes, int t, double alpha,
                          Rng& rng) {
  outcomes.validate();
  if (!std::holds_alternative<PureOptimalSpec>(design.variant)) {
    throw Error(ErrorCode::kInput, "inference",
                "the bootstrap test is defined for pure-optimal designs");
  }
  if (design.m != 2) {
    throw Error(ErrorCode::kUnsupported, "inference",
                "the bootstrap test is implemented for two treatments");
  }
  const int n = static_cast<int>(x.n());
  if (n != outcomes.assignment.n()) {
    throw Error(ErrorCode::kInput, "inference",
                "covariates and outcomes disagree on n");
  }
  if (n > 32) {
    throw Error(ErrorCode::kInput, "inference",
                "bootstrap re-solves are guarded to n <= 32");
  }
  const double tau_hat = mean_difference(outcomes);

  const std::uint64_t base = rng();
  int exceed = 0;
  for (int rep = 1; rep <= t; ++rep) {
    Rng stream = make_rng(base, static_cast<std::uint64_t>(rep));
    bool done = false;
    for (int attempt = 0; attempt < 3 && !done; ++attempt) {
      std::vector<int> idx(static_cast<size_t>(n));
      std::uniform_int_distribution<int> pick(0, n - 1);
      Matrix xb(n, x.d());
      for (int j = 0; j < n; ++j) {
        idx[static_cast<size_t>(j)] = pick(stream);
        xb.row(j) = x.mat().row(idx[static_cast<size_t>(j)]);
      }
      try {
        DesignDistribution resolved =
            build_design(design, CovariateMatrix(xb));
        Assignment wt = resolved.sample(stream);
        double s1 = 0.0, s2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double y = outcomes.observed(idx[static_cast<size_t>(j)]);
          if (wt.label(j) == 1) s1 += y;
          if (wt.label(j) == 2) s2 += y;
        }
        const double stat = s1 / wt.p() - s2 / wt.p();
        if (std::abs(stat) >= std::abs(tau_hat)) ++exceed;
        done = true;
      } catch (const Error&) {
        if (attempt == 2) throw;
      }
    }
  }
  return finish_mc(tau_hat, exceed, t, alpha);
}

TestResult exact_permutation_test(const DesignDistribution& design,
                                  const OutcomeTable& outcomes, double alpha) {
  outcomes.validate();
  if (!design.has_explicit_support()) {
    throw Error(ErrorCode::kUnsupported, "inference",
                "the exact test needs a full description of the design; use "
                "randomization_test");
  }
  const double tau_hat = mean_difference(outcomes);
  double p = 0.0;
  for (const auto& [w, weight] : design.support()) {
    if (std::abs(statistic_under(w, outcomes.observed)) >= std::abs(tau_hat)) {
      p += weight;
    }
  }
  TestResult result;
  result.estimate = tau_hat;
  result.replicates = static_cast<int>(design.support().size());
  result.alpha = alpha;
  result.p_value = std::min(p, 1.0);
  result.reject = result.p_value <= alpha;
  return result;
}

TestResult randomization_test(const DesignDistribution& design,
                              const OutcomeTable& outcomes, int t,
                              double alpha, Rng& rng) {
  outcomes.validate();
  const double tau_hat = mean_difference(outcomes);
  int exceed = 0;
  for (int rep = 0; rep < t; ++rep) {
    Assignment wt = design.sample(rng);
    if (std::abs(statistic_under(wt, outcomes.observed)) >=
        std::abs(tau_hat)) {
      ++exceed;
    }
  }
  return finish_mc(tau_hat, exceed, t, alpha);
}

}  // namespace balopt
