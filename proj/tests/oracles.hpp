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
//
// Brute-force reference implementations used as test oracles. These stay
// independent of the solver code paths they check.

#ifndef BALOPT_TESTS_ORACLES_HPP
#define BALOPT_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "balopt/imbalance.hpp"
#include "balopt/pure_opt.hpp"

namespace balopt::oracles {

// Minimum-weight perfect matching by recursion over all (n-1)!! pairings.
inline double brute_min_perfect_matching(
    const Matrix& d, std::vector<std::pair<int, int>>* best_pairs = nullptr) {
  const int n = static_cast<int>(d.rows());
  std::vector<int> free_ids(static_cast<size_t>(n));
  std::iota(free_ids.begin(), free_ids.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> current, best_found;
  std::function<void(std::vector<int>&, double)> rec =
      [&](std::vector<int>& free, double acc) {
        if (free.empty()) {
          if (acc < best) {
            best = acc;
            best_found = current;
          }
          return;
        }
        const int a = free.front();
        for (size_t j = 1; j < free.size(); ++j) {
          const int b = free[j];
          std::vector<int> rest;
          for (size_t k = 1; k < free.size(); ++k) {
            if (k != j) rest.push_back(free[k]);
          }
          current.emplace_back(a, b);
          rec(rest, acc + d(a, b));
          current.pop_back();
        }
      };
  rec(free_ids, 0.0);
  if (best_pairs) *best_pairs = best_found;
  return best;
}

// Minimum-cost bipartite assignment over all permutations (p <= 8).
inline double brute_min_bipartite(const Matrix& cost) {
  const int p = static_cast<int>(cost.rows());
  std::vector<int> perm(static_cast<size_t>(p));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double acc = 0.0;
    for (int i = 0; i < p; ++i) acc += cost(i, perm[static_cast<size_t>(i)]);
    best = std::min(best, acc);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Unsquared Lipschitz metric straight from the dual: the transportation
// problem on a metric reduces to a bipartite matching between the groups,
// enumerated here exhaustively (m = 2).
inline double lipschitz_metric_by_enumeration(const Assignment& w,
                                              const Matrix& d) {
  std::vector<int> g1, g2;
  for (int i = 0; i < w.n(); ++i) {
    (w.label(i) == 1 ? g1 : g2).push_back(i);
  }
  Matrix cost(g1.size(), g2.size());
  for (size_t i = 0; i < g1.size(); ++i) {
    for (size_t j = 0; j < g2.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          d(g1[i], g2[j]);
    }
  }
  return 2.0 / double(w.n()) * brute_min_bipartite(cost);
}

// Unsquared L-infinity metric by maximizing B(W, f) over sign functions on
// the distinct covariate values (m = 2).
inline double linf_metric_by_enumeration(const Assignment& w,
                                         const CovariateMatrix& x) {
  std::map<std::vector<double>, std::vector<int>> classes;
  for (int i = 0; i < w.n(); ++i) {
    std::vector<double> key(static_cast<size_t>(x.d()));
    for (Eigen::Index j = 0; j < x.d(); ++j) key[static_cast<size_t>(j)] = x.mat()(i, j);
    classes[key].push_back(i);
  }
  std::vector<std::vector<int>> members;
  for (auto& [key, ids] : classes) members.push_back(ids);
  const size_t levels = members.size();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << levels); ++mask) {
    double b = 0.0;
    for (size_t v = 0; v < levels; ++v) {
      const double f = ((mask >> v) & 1) ? 1.0 : -1.0;
      for (int i : members[v]) {
        b += (w.label(i) == 1 ? 1.0 : -1.0) * f;
      }
    }
    best = std::max(best, std::abs(b) * 2.0 / double(w.n()));
  }
  return best;
}

// Squared RKHS metric via the spectral parameterization: f-evaluations are
// sqrt(K) gamma over the unit ball of gamma, so the maximum of B^2 is the
// squared norm of (1/p) sqrt(K) c, found here by explicit maximization of
// the linear form rather than through the quadratic-form shortcut.
inline double rkhs_metric_by_dual(const Assignment& w, const SymMatrix& k) {
  SymMatrix root = psd_sqrt(k);
  double best = 0.0;
  for (int a = 1; a <= w.m(); ++a) {
    for (int b = a + 1; b <= w.m(); ++b) {
      Vector c = w.pair_contrast(a, b);
      Vector lin = root.mat() * c / double(w.p());
      const double norm = lin.norm();
      if (norm > 0) {
        Vector gamma = lin / norm;  // maximizer of <lin, gamma> on the ball
        const double val = lin.dot(gamma);
        best = std::max(best, val * val);
      }
    }
  }
  return best;
}

// Exhaustive minimum of a squared-metric evaluator over canonical
// assignments; returns all ties.
template <typename F>
std::pair<double, std::vector<Assignment>> exhaustive_min(int n, int m,
                                                          F&& value) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<Assignment, double>> kept;
  for_each_canonical_assignment(n, m, [&](const std::vector<int>& labels) {
    Assignment w(labels, m);
    const double v = value(w);
    if (v < best) best = v;
    kept.emplace_back(std::move(w), v);
  });
  std::vector<Assignment> ties;
  for (auto& [w, v] : kept) {
    if (v <= best + 1e-9 * (1.0 + std::abs(best))) ties.push_back(std::move(w));
  }
  return {best, ties};
}

}  // namespace balopt::oracles

#endif  // BALOPT_TESTS_ORACLES_HPP
