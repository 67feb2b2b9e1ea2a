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

#ifndef BALOPT_MIXED_OPT_HPP
#define BALOPT_MIXED_OPT_HPP

#include <vector>

#include "balopt/imbalance.hpp"
#include "balopt/pure_opt.hpp"

namespace balopt {

struct MixedSolveOptions {
  int max_iterations = 2000;  // subgradient / exponentiated-gradient steps
  int dykstra_sweeps = 200;   // per projection
  double tolerance = 1e-6;    // feasibility slack
};

// Nonnegative weights over the candidate assignments, summing to one.
struct SimplexWeights {
  Vector theta;

  void validate() const;
};

struct Algorithm2Result {
  SimplexWeights weights;
  double objective = 0.0;         // lambda_max(sum_t theta_t sqrtK u_t u_t^T sqrtK)
  double constraint_value = 0.0;  // (1 - 1/n) lambda_max(sum_t theta_t u_t u_t^T)
  bool feasible = true;
  bool converged = true;
};

// Inner-approximation heuristic: optimize mixing weights over the given
// candidate sign vectors. Solved by exponentiated gradient on the simplex
// with an exact penalty for the worst-case-ratio constraint; when a feasible
// vertex beats the iterate, the vertex is returned, so the result never loses
// to a point mass. rho may be +infinity.
Algorithm2Result algorithm2_weights(const SymMatrix& k,
                                    const std::vector<Vector>& us, double rho,
                                    const MixedSolveOptions& opts = {});

struct Algorithm1Result {
  PMatrix p_hat;
  double objective = 0.0;
  double constraint_value = 0.0;
  bool feasible = true;
  bool converged = true;
};

// Outer-approximation heuristic: minimize lambda_max(sqrtK P sqrtK) over
// {P PSD, diag(P) = e, Pe = 0, (1-1/n) lambda_max(P) <= rho}. Projected
// subgradient descent, feasibility restored by Dykstra's alternating
// projections; complete randomization's P is the feasible starting point and
// benchmark, so the result never loses to it.
Algorithm1Result algorithm1_pmatrix(const SymMatrix& k, double rho,
                                    const MixedSolveOptions& opts = {});

// Sign-of-Gaussian sampler: u_i = sign(v_i - median(v)), v ~ N(0, P). Ties
// are broken by an infinitesimal jitter so the draw is always balanced.
Assignment sample_sign_gaussian(const PMatrix& p_hat, Rng& rng);

struct Algorithm3Result {
  std::vector<Vector> us;  // canonical candidates from the top-T enumeration
  Algorithm2Result weights;
};

// Top-T pure solutions fed into algorithm2_weights.
Algorithm3Result algorithm3_support(const SymMatrix& k, int t, double rho,
                                    const SolveOptions& bb_opts = {},
                                    const MixedSolveOptions& opts = {});

}  // namespace balopt

#endif  // BALOPT_MIXED_OPT_HPP
