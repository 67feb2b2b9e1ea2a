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

#ifndef BALOPT_IMBALANCE_HPP
#define BALOPT_IMBALANCE_HPP

#include <string>
#include <utility>
#include <vector>

#include "balopt/linalg.hpp"
#include "balopt/structures.hpp"

namespace balopt {

// Treatment labels in 1..m with exactly p = n/m subjects per treatment.
class Assignment {
 public:
  Assignment(std::vector<int> labels, int m);

  int n() const { return static_cast<int>(labels_.size()); }
  int m() const { return m_; }
  int p() const { return n() / m_; }
  int label(int i) const { return labels_[static_cast<size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }

  // Signed representation u_i = +1 for treatment 1, -1 for treatment 2.
  // Only defined for m == 2.
  Vector signed_vector() const;
  static Assignment from_signed(const Vector& u);

  // Indicator difference w_k - w_k' as a vector of {+1, 0, -1}.
  Vector pair_contrast(int k, int k_prime) const;

  bool operator==(const Assignment& other) const {
    return m_ == other.m_ && labels_ == other.labels_;
  }

 private:
  std::vector<int> labels_;
  int m_;
};

// Pair-assignment statistic P_ij = Pr(W_i = W_j) - Pr(W_i != W_j)/(m-1).
struct PMatrix {
  SymMatrix p;

  Eigen::Index order() const { return p.order(); }
  // Checks diag = 1, the entry range, and (for m = 2) zero row sums and
  // positive semi-definiteness up to tolerance.
  void validate(int m) const;
};

// A design with finite, explicitly weighted support.
using DesignSupport = std::vector<std::pair<Assignment, double>>;

// --- metric evaluation ------------------------------------------------------

// Squared pure-strategy RKHS metric:
// (1/p^2) max_{k != k'} (w_k - w_k')^T K (w_k - w_k').
double mp_rkhs(const Assignment& w, const SymMatrix& k);

// Squared mixed-strategy RKHS metric (2/(n p)) lambda_max(sqrt(K) P sqrt(K)).
double mm_rkhs(const PMatrix& p_matrix, const SymMatrix& k, int n, int p);

// Exact weighted pair statistic of an explicitly supported design.
PMatrix p_matrix_of_support(const DesignSupport& support, int m);

// Unsquared L-infinity metric 2 - (4/n) * (max cross-group exact matches).
// Two treatments only.
double mp_linf(const Assignment& w, const CovariateMatrix& x);

// Unsquared Lipschitz metric: (2/n) * min-cost perfect bipartite matching
// between the two groups for m = 2; (1/p) * max over treatment pairs of the
// bipartite value for m >= 3.
double mp_lipschitz(const Assignment& w, const SymMatrix& d);

// Lipschitz norm capped by the sup-norm at delta0: distances act through
// min(D_ij, 2*delta0) (a unit may route through the penalty node at delta0
// each way).
double mp_lipschitz_capped(const Assignment& w, const SymMatrix& d,
                           double delta0);

// Unsquared finite-dimensional q-norm metric:
// max_{k != k'} ||(1/p) Phi^T (w_k - w_k')||_{q*}, 1/q + 1/q* = 1.
double mp_finite_q(const Assignment& w, const Matrix& phi, double q);

// Squared group-wise Mahalanobis metric ((2/n) sum u_i X_i)^T SigmaHat^{-1} (...).
// Two treatments only.
double mahalanobis_imbalance(const Assignment& w, const CovariateMatrix& x);

// (1 - 1/n) * lambda_max(P); the worst-case conditional-variance ratio of the
// design against complete randomization (m = 2).
double worst_case_ratio(const PMatrix& p_matrix);

// --- unified reporting ------------------------------------------------------

struct ImbalanceReport {
  std::string structure;
  bool mixed = false;
  double value_squared = 0.0;
  std::string certificate_kind;  // coefficients|eigenvector|dual_potentials|sign_pattern
  Vector certificate;

  double value_unsquared() const;
};

// Evaluates M_p^2 of an assignment under any structure, with a description of
// the norm-ball maximizer as certificate.
ImbalanceReport evaluate_pure(const StructureSpec& spec, const Assignment& w,
                              const CovariateMatrix& x);

// Evaluates M_m^2 of a P-matrix under an RKHS structure.
ImbalanceReport evaluate_mixed_rkhs(const Kernel& kernel,
                                    const CovariateMatrix& x,
                                    const PMatrix& p_matrix, int m);

}  // namespace balopt

#endif  // BALOPT_IMBALANCE_HPP
