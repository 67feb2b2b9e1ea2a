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

#include "balopt/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "balopt/matching.hpp"

namespace balopt {

Assignment::Assignment(std::vector<int> labels, int m)
    : labels_(std::move(labels)), m_(m) {
  if (m_ < 2) {
    throw Error(ErrorCode::kInput, "imbalance", "need at least 2 treatments");
  }
  const int n = static_cast<int>(labels_.size());
  if (n == 0 || n % m_ != 0) {
    throw Error(ErrorCode::kInput, "imbalance",
                "n must be a positive multiple of m");
  }
  std::vector<int> counts(static_cast<size_t>(m_), 0);
  for (int lab : labels_) {
    if (lab < 1 || lab > m_) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "treatment labels must lie in 1..m");
    }
    ++counts[static_cast<size_t>(lab - 1)];
  }
  const int p = n / m_;
  for (int c : counts) {
    if (c != p) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "assignment is not balanced: expected p subjects per "
                  "treatment");
    }
  }
}

Vector Assignment::signed_vector() const {
  if (m_ != 2) {
    throw Error(ErrorCode::kUnsupported, "imbalance",
                "signed vector is defined for two treatments");
  }
  Vector u(n());
  for (int i = 0; i < n(); ++i) u(i) = labels_[static_cast<size_t>(i)] == 1 ? 1.0 : -1.0;
  return u;
}

Assignment Assignment::from_signed(const Vector& u) {
  std::vector<int> labels(static_cast<size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u(i) != 1.0 && u(i) != -1.0) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "signed assignment entries must be +1 or -1");
    }
    labels[static_cast<size_t>(i)] = u(i) > 0 ? 1 : 2;
  }
  return Assignment(std::move(labels), 2);
}

Vector Assignment::pair_contrast(int k, int k_prime) const {
  Vector c = Vector::Zero(n());
  for (int i = 0; i < n(); ++i) {
    if (labels_[static_cast<size_t>(i)] == k) c(i) = 1.0;
    if (labels_[static_cast<size_t>(i)] == k_prime) c(i) = -1.0;
  }
  return c;
}

void PMatrix::validate(int m) const {
  const Eigen::Index n = p.order();
  const double tol = 1e-8;
  const double lower = -1.0 / double(m - 1) - tol;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(p(i, i) - 1.0) > tol) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "P matrix diagonal must equal 1");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (p(i, j) < lower || p(i, j) > 1.0 + tol) {
        throw Error(ErrorCode::kInput, "imbalance",
                    "P matrix entry outside [-1/(m-1), 1]");
      }
    }
  }
  if (m == 2) {
    Vector row_sums = p.mat().rowwise().sum();
    if (row_sums.cwiseAbs().maxCoeff() > 1e-7) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "P matrix rows must sum to zero for m = 2");
    }
    Spectrum s = sym_eigen(p);
    if (s.lambda_min() < -kPsdClampTol * std::max(s.lambda_max(), 1.0)) {
      throw Error(ErrorCode::kNotPsd, "imbalance",
                  "P matrix must be positive semi-definite for m = 2");
    }
  }
}

double mp_rkhs(const Assignment& w, const SymMatrix& k) {
  if (k.order() != w.n()) {
    throw Error(ErrorCode::kInput, "imbalance",
                "Gram matrix order does not match assignment length");
  }
  const double p = static_cast<double>(w.p());
  double best = 0.0;
  for (int a = 1; a <= w.m(); ++a) {
    for (int b = a + 1; b <= w.m(); ++b) {
      Vector c = w.pair_contrast(a, b);
      best = std::max(best, c.dot(k.mat() * c));
    }
  }
  return best / (p * p);
}

double mm_rkhs(const PMatrix& p_matrix, const SymMatrix& k, int n, int p) {
  if (p_matrix.order() != n || k.order() != n) {
    throw Error(ErrorCode::kInput, "imbalance",
                "P and K must both have order n");
  }
  SymMatrix root = psd_sqrt(k);
  SymMatrix inner(root.mat() * p_matrix.p.mat() * root.mat());
  Spectrum s = sym_eigen(inner);
  return 2.0 / (double(n) * double(p)) * std::max(s.lambda_max(), 0.0);
}

PMatrix p_matrix_of_support(const DesignSupport& support, int m) {
  if (support.empty()) {
    throw Error(ErrorCode::kInput, "imbalance", "design support is empty");
  }
  const int n = support.front().first.n();
  double total = 0.0;
  for (const auto& [w, weight] : support) {
    if (weight < -1e-12) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "design weights must be nonnegative");
    }
    if (w.n() != n || w.m() != m) {
      throw Error(ErrorCode::kInput, "imbalance",
                  "design support mixes assignment shapes");
    }
    total += weight;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw Error(ErrorCode::kInput, "imbalance",
                "design weights must sum to one");
  }
  Matrix p = Matrix::Zero(n, n);
  const double anti = 1.0 / double(m - 1);
  for (const auto& [w, weight] : support) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = (w.label(i) == w.label(j)) ? weight : -anti * weight;
        p(i, j) += v;
        if (j != i) p(j, i) += v;
      }
    }
  }
  PMatrix result{SymMatrix(p)};
  result.validate(m);
  return result;
}

namespace {

// Per distinct covariate value, counts of subjects in groups 1 and 2.
std::map<std::vector<double>, std::pair<int, int>> group_counts(
    const Assignment& w, const CovariateMatrix& x) {
  std::map<std::vector<double>, std::pair<int, int>> counts;
  for (int i = 0; i < w.n(); ++i) {
    std::vector<double> key(x.d());
    for (Eigen::Index j = 0; j < x.d(); ++j) key[static_cast<size_t>(j)] = x.mat()(i, j);
    auto& entry = counts[key];
    if (w.label(i) == 1) {
      ++entry.first;
    } else {
      ++entry.second;
    }
  }
  return counts;
}

double bipartite_group_value(const Assignment& w, const Matrix& d, int a,
                             int b, std::vector<int>* rows = nullptr,
                             std::vector<int>* cols = nullptr,
                             Vector* row_duals = nullptr,
                             Vector* col_duals = nullptr) {
  std::vector<int> ga, gb;
  for (int i = 0; i < w.n(); ++i) {
    if (w.label(i) == a) ga.push_back(i);
    if (w.label(i) == b) gb.push_back(i);
  }
  const int p = static_cast<int>(ga.size());
  Matrix cost(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      cost(i, j) = d(ga[static_cast<size_t>(i)], gb[static_cast<size_t>(j)]);
    }
  }
  if (rows) *rows = ga;
  if (cols) *cols = gb;
  return hungarian_min_cost(cost, nullptr, row_duals, col_duals);
}

double lipschitz_value(const Assignment& w, const Matrix& d) {
  if (w.m() == 2) {
    return (2.0 / double(w.n())) * bipartite_group_value(w, d, 1, 2);
  }
  double best = 0.0;
  for (int a = 1; a <= w.m(); ++a) {
    for (int b = a + 1; b <= w.m(); ++b) {
      best = std::max(best, bipartite_group_value(w, d, a, b));
    }
  }
  return best / double(w.p());
}

}  // namespace

double mp_linf(const Assignment& w, const CovariateMatrix& x) {
  if (w.m() != 2) {
    throw Error(ErrorCode::kUnsupported, "imbalance",
                "the exact-matching metric is implemented for two "
                "treatments");
  }
  if (x.n() != w.n()) {
    throw Error(ErrorCode::kInput, "imbalance",
                "covariate rows do not match assignment length");
  }
  int matches = 0;
  for (const auto& [value, counts] : group_counts(w, x)) {
    matches += std::min(counts.first, counts.second);
  }
  return 2.0 - 4.0 * double(matches) / double(w.n());
}

double mp_lipschitz(const Assignment& w, const SymMatrix& d) {
  if (d.order() != w.n()) {
    throw Error(ErrorCode::kInput, "imbalance",
                "distance matrix order does not match assignment length");
  }
  return lipschitz_value(w, d.mat());
}

double mp_lipschitz_capped(const Assignment& w, const SymMatrix& d,
                           double delta0) {
  if (!(delta0 > 0)) {
    throw Error(ErrorCode::kInput, "imbalance", "delta0 must be positive");
  }
  const Eigen::Index n = d.order();
  Matrix capped(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      capped(i, j) = (i == j) ? 0.0 : std::min(d(i, j), 2.0 * delta0);
    }
  }
  return lipschitz_value(w, capped);
}

double mp_finite_q(const Assignment& w, const Matrix& phi, double q) {
  if (phi.rows() != w.n()) {
    throw Error(ErrorCode::kInput, "imbalance",
                "basis matrix rows do not match assignment length");
  }
  if (!(q == 1.0 || q == 2.0 || std::isinf(q))) {
    throw Error(ErrorCode::kInput, "imbalance", "q must be 1, 2, or infinity");
  }
  const double p = static_cast<double>(w.p());
  double best = 0.0;
  for (int a = 1; a <= w.m(); ++a) {
    for (int b = a + 1; b <= w.m(); ++b) {
      Vector g = phi.transpose() * w.pair_contrast(a, b) / p;
      double value;
      if (q == 1.0) {
        value = g.cwiseAbs().maxCoeff();  // dual norm: infinity
      } else if (q == 2.0) {
        value = g.norm();
      } else {
        value = g.cwiseAbs().sum();  // dual norm: 1
      }
      best = std::max(best, value);
    }
  }
  return best;
}

double mahalanobis_imbalance(const Assignment& w, const CovariateMatrix& x) {
  if (w.m() != 2) {
    throw Error(ErrorCode::kUnsupported, "imbalance",
                "the group-wise Mahalanobis metric is defined for two "
                "treatments");
  }
  if (x.n() != w.n()) {
    throw Error(ErrorCode::kInput, "imbalance",
                "covariate rows do not match assignment length");
  }
  Vector u = w.signed_vector();
  Vector v = (2.0 / double(w.n())) * (x.mat().transpose() * u);
  Matrix sigma = sample_covariance_ridged(x.mat());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingular, "imbalance",
                "sample covariance not positive definite after ridge");
  }
  return v.dot(llt.solve(v));
}

double worst_case_ratio(const PMatrix& p_matrix) {
  const double n = static_cast<double>(p_matrix.order());
  Spectrum s = sym_eigen(p_matrix.p);
  return (1.0 - 1.0 / n) * s.lambda_max();
}

double ImbalanceReport::value_unsquared() const {
  return std::sqrt(std::max(value_squared, 0.0));
}

namespace {

std::pair<int, int> best_pair(const Assignment& w,
                              const std::function<double(int, int)>& value) {
  double best = -1.0;
  std::pair<int, int> arg{1, 2};
  for (int a = 1; a <= w.m(); ++a) {
    for (int b = a + 1; b <= w.m(); ++b) {
      const double v = value(a, b);
      if (v > best) {
        best = v;
        arg = {a, b};
      }
    }
  }
  return arg;
}

}  // namespace

ImbalanceReport evaluate_pure(const StructureSpec& spec, const Assignment& w,
                              const CovariateMatrix& x) {
  validate_structure(spec);
  ImbalanceReport report;
  report.structure = structure_id(spec);

  if (const auto* rkhs = std::get_if<RkhsSpec>(&spec)) {
    SymMatrix k = gram_matrix(rkhs->kernel, x);
    report.value_squared = mp_rkhs(w, k);
    auto [a, b] = best_pair(w, [&](int i, int j) {
      Vector c = w.pair_contrast(i, j);
      return c.dot(k.mat() * c);
    });
    Vector c = w.pair_contrast(a, b);
    const double quad = c.dot(k.mat() * c);
    report.certificate_kind = "coefficients";
    report.certificate = quad > 0 ? Vector(c / std::sqrt(quad)) : Vector(c);
    return report;
  }

  if (const auto* lip = std::get_if<LipschitzSpec>(&spec)) {
    SymMatrix d = pairwise_distances(lip->metric, x);
    const double value = mp_lipschitz(w, d);
    report.value_squared = value * value;
    // Dual potentials from the bipartite matching of the binding pair.
    auto [a, b] = best_pair(w, [&](int i, int j) {
      return bipartite_group_value(w, d.mat(), i, j);
    });
    std::vector<int> rows, cols;
    Vector ru, cv;
    bipartite_group_value(w, d.mat(), a, b, &rows, &cols, &ru, &cv);
    Vector y = Vector::Zero(w.n());
    for (size_t i = 0; i < rows.size(); ++i) y(rows[i]) = ru(static_cast<Eigen::Index>(i));
    for (size_t j = 0; j < cols.size(); ++j) y(cols[j]) = -cv(static_cast<Eigen::Index>(j));
    report.certificate_kind = "dual_potentials";
    report.certificate = y;
    return report;
  }

  if (const auto* capped = std::get_if<LipschitzCappedSpec>(&spec)) {
    SymMatrix d = pairwise_distances(capped->metric, x);
    const double value = mp_lipschitz_capped(w, d, capped->delta0);
    report.value_squared = value * value;
    report.certificate_kind = "dual_potentials";
    report.certificate = Vector();
    return report;
  }

  if (std::holds_alternative<LInfinitySpec>(spec)) {
    const double value = mp_linf(w, x);
    report.value_squared = value * value;
    // Maximizing f assigns +1 to values over-represented in group 1.
    Vector f(w.n());
    auto counts = group_counts(w, x);
    for (int i = 0; i < w.n(); ++i) {
      std::vector<double> key(x.d());
      for (Eigen::Index j = 0; j < x.d(); ++j) key[static_cast<size_t>(j)] = x.mat()(i, j);
      const auto& c = counts[key];
      f(i) = c.first >= c.second ? 1.0 : -1.0;
    }
    report.certificate_kind = "sign_pattern";
    report.certificate = f;
    return report;
  }

  if (const auto* fq = std::get_if<FiniteDimQSpec>(&spec)) {
    Matrix phi = fq->basis.matrix(x);
    const double value = mp_finite_q(w, phi, fq->q);
    report.value_squared = value * value;
    auto [a, b] = best_pair(w, [&](int i, int j) {
      Vector g = phi.transpose() * w.pair_contrast(i, j) / double(w.p());
      if (fq->q == 1.0) return g.cwiseAbs().maxCoeff();
      if (fq->q == 2.0) return g.norm();
      return g.cwiseAbs().sum();
    });
    Vector g = phi.transpose() * w.pair_contrast(a, b) / double(w.p());
    Vector beta = Vector::Zero(g.size());
    if (fq->q == 2.0) {
      if (g.norm() > 0) beta = g / g.norm();
    } else if (fq->q == 1.0) {
      Eigen::Index j;
      g.cwiseAbs().maxCoeff(&j);
      beta(j) = g(j) >= 0 ? 1.0 : -1.0;
    } else {
      for (Eigen::Index j = 0; j < g.size(); ++j) beta(j) = g(j) >= 0 ? 1.0 : -1.0;
    }
    report.certificate_kind = "coefficients";
    report.certificate = beta;
    return report;
  }

  // MahalanobisLinear
  report.value_squared = mahalanobis_imbalance(w, x);
  Matrix sigma = sample_covariance_ridged(x.mat());
  Vector u = w.signed_vector();
  Vector v = (2.0 / double(w.n())) * (x.mat().transpose() * u);
  Eigen::LLT<Matrix> llt(sigma);
  Vector beta = llt.solve(v);
  const double norm2 = beta.dot(sigma * beta);
  if (norm2 > 0) beta /= std::sqrt(norm2);
  report.certificate_kind = "coefficients";
  report.certificate = beta;
  return report;
}

ImbalanceReport evaluate_mixed_rkhs(const Kernel& kernel,
                                    const CovariateMatrix& x,
                                    const PMatrix& p_matrix, int m) {
  ImbalanceReport report;
  report.structure = structure_id(RkhsSpec{kernel});
  report.mixed = true;
  const int n = static_cast<int>(x.n());
  SymMatrix k = gram_matrix(kernel, x);
  report.value_squared = mm_rkhs(p_matrix, k, n, n / m);
  SymMatrix root = psd_sqrt(k);
  SymMatrix inner(root.mat() * p_matrix.p.mat() * root.mat());
  Spectrum s = sym_eigen(inner);
  report.certificate_kind = "eigenvector";
  report.certificate = s.eigenvectors.col(0);
  return report;
}

}  // namespace balopt
