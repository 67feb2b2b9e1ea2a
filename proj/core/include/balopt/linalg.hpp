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

#ifndef BALOPT_LINALG_HPP
#define BALOPT_LINALG_HPP

#include <Eigen/Dense>

#include "balopt/common.hpp"

namespace balopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative threshold below which negative eigenvalues of a nominally PSD
// matrix are clamped to zero. Gram matrices of smooth kernels are routinely
// rank-deficient in floating point.
inline constexpr double kPsdClampTol = 1e-8;

// Dense symmetric matrix. Storage keeps a(i,j) == a(j,i) bit-exact: the
// constructor averages with the transpose and mutation writes both triangles.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Eigen::Index order) : a_(Matrix::Zero(order, order)) {}

  // Accepts any square matrix; asymmetry is averaged away. Throws on
  // non-finite entries or a non-square input.
  explicit SymMatrix(const Matrix& a);

  Eigen::Index order() const { return a_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }
  void set(Eigen::Index i, Eigen::Index j, double v) {
    a_(i, j) = v;
    a_(j, i) = v;
  }

  const Matrix& mat() const { return a_; }

 private:
  Matrix a_;
};

// Full spectral decomposition, eigenvalues sorted descending and eigenvector
// columns aligned with them.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  double lambda_max() const { return eigenvalues(0); }
  double lambda_min() const { return eigenvalues(eigenvalues.size() - 1); }
};

// Deterministic dense symmetric eigendecomposition.
Spectrum sym_eigen(const SymMatrix& a);

// Symmetric PSD square root, R*R ~= a. Eigenvalues in
// [-kPsdClampTol * lambda_max, 0) are clamped to zero; anything lower
// raises ErrorCode::kNotPsd.
SymMatrix psd_sqrt(const SymMatrix& a);

// Factor B with B*B^T ~= a for PSD a, usable for Gaussian sampling.
// Lower-triangular when a is positive definite; rank-deficient inputs fall
// back to a pivoted LDLT factor (triangular up to the pivot permutation).
Matrix cholesky_psd(const SymMatrix& a);

}  // namespace balopt

#endif  // BALOPT_LINALG_HPP
