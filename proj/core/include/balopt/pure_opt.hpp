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

#ifndef BALOPT_PURE_OPT_HPP
#define BALOPT_PURE_OPT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "balopt/imbalance.hpp"
#include "balopt/matching.hpp"

namespace balopt {

struct SolveOptions {
  std::uint64_t node_limit = 0;     // 0 = unlimited
  double time_limit_seconds = 0.0;  // 0 = unlimited
};

struct OptimizerResult {
  // All ties when the solver is exhaustive, one representative otherwise.
  std::vector<Assignment> optima;
  // Squared metric M_p^2 for the structure-level solvers; the raw quadratic
  // form u^T K u for bb_partition_quadratic.
  double value = 0.0;
  std::uint64_t nodes = 0;
  std::string solver;
  bool proven_optimal = true;
};

// Number of canonical assignments (treatment permutations identified):
// multinomial(n; p..p) / m!.
double partition_class_count(int n, int m);

// Visits every canonical assignment exactly once (label k appears before
// label k+1 when scanning subjects in order).
void for_each_canonical_assignment(
    int n, int m, const std::function<void(const std::vector<int>&)>& visit);

// Exact enumeration over canonical assignments for any structure.
// Throws when the class count exceeds `guard`.
OptimizerResult exhaustive_pure_opt(const StructureSpec& spec,
                                    const CovariateMatrix& x, int m,
                                    std::uint64_t guard = 10000000);

// Exact minimum of u^T K u over balanced u in {-1,+1}^n via depth-first
// branch-and-bound (m = 2, symmetry broken by fixing u_1 = +1). On a budget
// hit, returns the best-found solution flagged proven_optimal = false.
OptimizerResult bb_partition_quadratic(const SymMatrix& k,
                                       const SolveOptions& opts = {});

// The T best distinct balanced sign vectors by u^T K u, nondecreasing,
// canonicalized to u_1 = +1. Each successive solve cuts away exactly the
// previous optimum (u_t^T u <= n-4 excludes only u_t among balanced vectors).
// Returns fewer than T when the canonical space is exhausted.
std::vector<Vector> top_t_solutions(const SymMatrix& k, int t,
                                    const SolveOptions& opts = {});

// Incomplete blocking: within each distinct covariate row, floor(count/2)
// random pairs are split between the treatments; leftovers are completely
// randomized subject to global balance. m = 2.
Assignment blocking_assign(const CovariateMatrix& x, Rng& rng);

// Pure-strategy optimum for a finite-dimensional q-norm structure given the
// basis matrix Phi. q = 2 with m = 2 reduces to bb_partition_quadratic on
// Phi Phi^T; other cases enumerate. Value is M_p^2.
OptimizerResult finite_q_pure_opt(const Matrix& phi, double q, int m,
                                  std::uint64_t guard = 10000000);

}  // namespace balopt

#endif  // BALOPT_PURE_OPT_HPP
