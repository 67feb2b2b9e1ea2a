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

#include "balopt/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace balopt {

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kInput, "linalg",
                "SymMatrix requires a square matrix");
  }
  if (!a.allFinite()) {
    throw Error(ErrorCode::kInput, "linalg",
                "SymMatrix requires finite entries");
  }
  a_ = 0.5 * (a + a.transpose());
}

Spectrum sym_eigen(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kInput, "linalg", "eigendecomposition failed");
  }
  // Eigen sorts ascending; flip to descending.
  Spectrum s;
  s.eigenvalues = solver.eigenvalues().reverse();
  s.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return s;
}

SymMatrix psd_sqrt(const SymMatrix& a) {
  Spectrum s = sym_eigen(a);
  const double lmax = std::max(s.lambda_max(), 0.0);
  const double floor = -kPsdClampTol * std::max(lmax, 1.0);
  if (s.lambda_min() < floor) {
    throw Error(ErrorCode::kNotPsd, "linalg",
                "matrix is indefinite beyond the clamping tolerance");
  }
  Vector roots = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Matrix r = s.eigenvectors * roots.asDiagonal() * s.eigenvectors.transpose();
  return SymMatrix(r);
}

Matrix cholesky_psd(const SymMatrix& a) {
  Eigen::LLT<Matrix> llt(a.mat());
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  // Rank-deficient or slightly indefinite: verify it is PSD up to the clamp
  // tolerance, then build the factor from a pivoted LDLT with D clamped at 0.
  Spectrum s = sym_eigen(a);
  const double lmax = std::max(s.lambda_max(), 0.0);
  if (s.lambda_min() < -kPsdClampTol * std::max(lmax, 1.0)) {
    throw Error(ErrorCode::kNotPsd, "linalg",
                "matrix is indefinite beyond the clamping tolerance");
  }
  Eigen::LDLT<Matrix> ldlt(a.mat());
  Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Matrix l = ldlt.matrixL();
  Matrix b = ldlt.transpositionsP().transpose() * Matrix(l * d.asDiagonal());
  return b;
}

}  // namespace balopt
