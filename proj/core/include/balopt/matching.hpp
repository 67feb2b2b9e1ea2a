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

#ifndef BALOPT_MATCHING_HPP
#define BALOPT_MATCHING_HPP

#include <utility>
#include <vector>

#include "balopt/linalg.hpp"

namespace balopt {

// Minimum-cost assignment on a square cost matrix (Kuhn-Munkres with
// potentials, O(n^3)). Optionally reports the column matched to each row and
// the dual potentials.
double hungarian_min_cost(const Matrix& cost,
                          std::vector<int>* row_to_col = nullptr,
                          Vector* row_duals = nullptr,
                          Vector* col_duals = nullptr);

// A pairing of subjects. `pairs` are disjoint; `unmatched` is empty for
// perfect matchings and has even size otherwise. `weight` sums the distances
// over matched pairs; `objective` adds the per-subject penalty when one was
// paid.
struct Matching {
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unmatched;
  double weight = 0.0;
  double objective = 0.0;
};

// Exact minimum-weight perfect matching on the complete graph with the given
// symmetric distance matrix (Edmonds blossom, O(n^3)). Distances are scaled
// to 64-bit integers internally; the relative rounding error is ~1e-12.
// Throws on odd order.
Matching blossom_matching(const SymMatrix& d);

// Minimum of sum(pair distances) + delta0 * #unmatched, leaving subjects
// unmatched where that is cheaper. No returned pair has distance > 2*delta0.
Matching penalty_matching(const SymMatrix& d, double delta0);

}  // namespace balopt

#endif  // BALOPT_MATCHING_HPP
