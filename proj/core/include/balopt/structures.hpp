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

#ifndef BALOPT_STRUCTURES_HPP
#define BALOPT_STRUCTURES_HPP

#include <string>
#include <variant>
#include <vector>

#include "balopt/linalg.hpp"

namespace balopt {

// n subjects by d baseline covariates. Rows are subjects.
class CovariateMatrix {
 public:
  explicit CovariateMatrix(Matrix x);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index d() const { return x_.cols(); }
  Eigen::RowVectorXd row(Eigen::Index i) const { return x_.row(i); }
  const Matrix& mat() const { return x_; }

 private:
  Matrix x_;
};

struct Kernel {
  enum class Kind { kLinear, kPolynomial, kGaussian, kExponential };

  Kind kind = Kind::kLinear;
  int degree = 2;          // polynomial: (1 + x.y/degree)^degree
  double bandwidth = 1.0;  // gaussian: exp(-|x-y|^2 / bandwidth^2)
  double scale = 1.0;      // exponential: exp(x.y / scale)

  static Kernel linear() { return {Kind::kLinear}; }
  static Kernel polynomial(int s) { return {Kind::kPolynomial, s}; }
  static Kernel gaussian(double bw = 1.0) {
    Kernel k{Kind::kGaussian};
    k.bandwidth = bw;
    return k;
  }
  static Kernel exponential(double scale = 1.0) {
    Kernel k{Kind::kExponential};
    k.scale = scale;
    return k;
  }

  std::string name() const;
};

double kernel_eval(const Kernel& k, const Eigen::RowVectorXd& x,
                   const Eigen::RowVectorXd& y);

// Gram matrix K_ij = kernel(X_i, X_j). Symmetric; PSD up to the clamping
// tolerance used by downstream eigen routines.
SymMatrix gram_matrix(const Kernel& k, const CovariateMatrix& x);

// Monomial basis {prod_i x_i^{t_i} : sum t_i <= degree}, r = C(d+s, s) terms.
// Each term carries the coefficient scale^(1 - |t|); scale = 1 leaves plain
// monomials.
class BasisSet {
 public:
  static BasisSet monomials(int d, int degree, double scale = 1.0);

  Eigen::Index size() const { return static_cast<Eigen::Index>(terms_.size()); }
  Eigen::Index dim() const { return d_; }
  const std::string& term_name(Eigen::Index j) const { return names_[j]; }

  double eval(Eigen::Index j, const Eigen::RowVectorXd& x) const;
  Matrix matrix(const CovariateMatrix& x) const;  // n x r

  std::string name() const;

 private:
  Eigen::Index d_ = 0;
  int degree_ = 0;
  double scale_ = 1.0;
  std::vector<std::vector<int>> terms_;  // exponent multi-indices
  std::vector<double> coeffs_;
  std::vector<std::string> names_;
};

// Entry-wise basis evaluation Phi_ij = phi_j(X_i).
Matrix basis_matrix(const BasisSet& b, const CovariateMatrix& x);

class DistanceMetric {
 public:
  enum class Kind { kEuclidean, kMahalanobis, kCustom };

  static DistanceMetric euclidean() { return DistanceMetric(Kind::kEuclidean); }
  static DistanceMetric mahalanobis() {
    return DistanceMetric(Kind::kMahalanobis);
  }
  // Precomputed distance matrix; metric axioms (nonnegativity, zero diagonal,
  // symmetry, triangle inequality within 1e-9) are validated here.
  static DistanceMetric custom(const SymMatrix& d);

  Kind kind() const { return kind_; }
  std::string name() const;

  // Pairwise matrix D_ij for the given subjects. Custom metrics require the
  // stored order to match n.
  SymMatrix pairwise(const CovariateMatrix& x) const;

 private:
  explicit DistanceMetric(Kind kind) : kind_(kind) {}
  Kind kind_;
  SymMatrix custom_;
};

SymMatrix pairwise_distances(const DistanceMetric& metric,
                             const CovariateMatrix& x);

// Center, whiten to identity sample covariance (1/(n-1) convention), then
// divide every entry by `divisor`.
CovariateMatrix normalize_covariates(const CovariateMatrix& x, double divisor);

// Sample covariance with the 1/(n-1) convention; adds the ridge
// 1e-8 * (trace/d) * I when near-singular.
Matrix sample_covariance_ridged(const Matrix& x);

// --- structural assumptions ----------------------------------------------

struct RkhsSpec {
  Kernel kernel;
};
struct LipschitzSpec {
  DistanceMetric metric = DistanceMetric::mahalanobis();
};
struct LipschitzCappedSpec {
  DistanceMetric metric = DistanceMetric::mahalanobis();
  double delta0 = 1.0;
};
struct LInfinitySpec {};
struct FiniteDimQSpec {
  BasisSet basis;
  double q = 2.0;  // 1, 2, or infinity
};
struct MahalanobisLinearSpec {};

using StructureSpec =
    std::variant<RkhsSpec, LipschitzSpec, LipschitzCappedSpec, LInfinitySpec,
                 FiniteDimQSpec, MahalanobisLinearSpec>;

std::string structure_id(const StructureSpec& s);
void validate_structure(const StructureSpec& s);

}  // namespace balopt

#endif  // BALOPT_STRUCTURES_HPP
