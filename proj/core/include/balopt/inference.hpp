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

#ifndef BALOPT_INFERENCE_HPP
#define BALOPT_INFERENCE_HPP

#include "balopt/designs.hpp"

namespace balopt {

// The realized assignment and the one observed outcome per subject.
struct OutcomeTable {
  Assignment assignment;
  Vector observed;

  void validate() const;
};

struct TestResult {
  double estimate = 0.0;
  double p_value = 1.0;
  int replicates = 0;
  double alpha = 0.05;
  bool reject = false;
};

// Simple mean-differences estimator between treatments k and k_prime.
double mean_difference(const OutcomeTable& outcomes, int k = 1,
                       int k_prime = 2);

// Bootstrap test for pure-optimal designs, whose randomization alone is too
// thin for Fisher's test: resample covariates with replacement, re-solve the
// design, and recompute the statistic on the observed outcomes at the
// resampled indices. Ties count toward rejection: p = (1 + #{|t~| >= |t^|})
// / (1 + T). The design spec must be PureOptimal and n <= 32.
TestResult bootstrap_test(const CovariateMatrix& x, const DesignSpec& design,
                          const OutcomeTable& outcomes, int t, double alpha,
                          Rng& rng);

// Exact permutation test over an explicitly supported design:
// p = sum_W sigma(W) I[|t~(W)| >= |t^|].
TestResult exact_permutation_test(const DesignDistribution& design,
                                  const OutcomeTable& outcomes, double alpha);

// Monte Carlo randomization test with the (1 + count)/(1 + T) rule.
TestResult randomization_test(const DesignDistribution& design,
                              const OutcomeTable& outcomes, int t,
                              double alpha, Rng& rng);

}  // namespace balopt

#endif  // BALOPT_INFERENCE_HPP
