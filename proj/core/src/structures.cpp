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

#include "balopt/structures.hpp"

#include <cmath>
#include <sstream>

namespace balopt {

namespace {

void require_same_dim(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInput, "structures",
                "kernel arguments have mismatched dimensions");
  }
}

}  // namespace

CovariateMatrix::CovariateMatrix(Matrix x) : x_(std::move(x)) {
  if (x_.rows() == 0 || x_.cols() == 0) {
    throw Error(ErrorCode::kInput, "structures", "empty covariate matrix");
  }
  if (!x_.allFinite()) {
    throw Error(ErrorCode::kInput, "structures",
                "covariates must be finite");
  }
}

std::string Kernel::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kLinear:
      os << "linear";
      break;
    case Kind::kPolynomial:
      os << "polynomial(s=" << degree << ")";
      break;
    case Kind::kGaussian:
      os << "gaussian(bandwidth=" << bandwidth << ")";
      break;
    case Kind::kExponential:
      os << "exponential(scale=" << scale << ")";
      break;
  }
  return os.str();
}

double kernel_eval(const Kernel& k, const Eigen::RowVectorXd& x,
                   const Eigen::RowVectorXd& y) {
  require_same_dim(x, y);
  switch (k.kind) {
    case Kernel::Kind::kLinear:
      return x.dot(y);
    case Kernel::Kind::kPolynomial: {
      if (k.degree < 1) {
        throw Error(ErrorCode::kInput, "structures",
                    "polynomial kernel degree must be positive");
      }
      const double s = static_cast<double>(k.degree);
      return std::pow(1.0 + x.dot(y) / s, s);
    }
    case Kernel::Kind::kGaussian: {
      if (!(k.bandwidth > 0)) {
        throw Error(ErrorCode::kInput, "structures",
                    "gaussian bandwidth must be positive");
      }
      const double d2 = (x - y).squaredNorm();
      return std::exp(-d2 / (k.bandwidth * k.bandwidth));
    }
    case Kernel::Kind::kExponential: {
      if (!(k.scale > 0)) {
        throw Error(ErrorCode::kInput, "structures",
                    "exponential kernel scale must be positive");
      }
      return std::exp(x.dot(y) / k.scale);
    }
  }
  throw Error(ErrorCode::kInput, "structures", "unknown kernel kind");
}

SymMatrix gram_matrix(const Kernel& k, const CovariateMatrix& x) {
  const Eigen::Index n = x.n();
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_eval(k, x.row(i), x.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return SymMatrix(g);
}

BasisSet BasisSet::monomials(int d, int degree, double scale) {
  if (d < 1 || degree < 0) {
    throw Error(ErrorCode::kInput, "structures",
                "monomial basis needs d >= 1 and degree >= 0");
  }
  BasisSet b;
  b.d_ = d;
  b.degree_ = degree;
  b.scale_ = scale;

  auto emit = [&b, scale](const std::vector<int>& idx) {
    int total = 0;
    for (int e : idx) total += e;
    b.terms_.push_back(idx);
    b.coeffs_.push_back(std::pow(scale, 1 - total));
    std::ostringstream name;
    bool first = true;
    for (size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] == 0) continue;
      if (!first) name << "*";
      name << "x" << (i + 1);
      if (idx[i] > 1) name << "^" << idx[i];
      first = false;
    }
    if (first) name << "1";
    b.names_.push_back(name.str());
  };

  // Recursive enumeration over coordinates.
  std::vector<int> cur(d, 0);
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == d) {
      emit(cur);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      cur[pos] = e;
      self(self, pos + 1, remaining - e);
    }
    cur[pos] = 0;
  };
  rec(rec, 0, degree);
  return b;
}

double BasisSet::eval(Eigen::Index j, const Eigen::RowVectorXd& x) const {
  if (x.size() != d_) {
    throw Error(ErrorCode::kInput, "structures",
                "basis evaluation dimension mismatch");
  }
  const std::vector<int>& t = terms_[static_cast<size_t>(j)];
  double v = coeffs_[static_cast<size_t>(j)];
  for (Eigen::Index i = 0; i < d_; ++i) {
    for (int e = 0; e < t[static_cast<size_t>(i)]; ++e) v *= x(i);
  }
  return v;
}

Matrix BasisSet::matrix(const CovariateMatrix& x) const {
  Matrix phi(x.n(), size());
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    for (Eigen::Index j = 0; j < size(); ++j) {
      phi(i, j) = eval(j, x.row(i));
    }
  }
  return phi;
}

std::string BasisSet::name() const {
  std::ostringstream os;
  os << "monomials(d=" << d_ << ",degree=" << degree_ << ",scale=" << scale_
     << ")";
  return os.str();
}

Matrix basis_matrix(const BasisSet& b, const CovariateMatrix& x) {
  return b.matrix(x);
}

DistanceMetric DistanceMetric::custom(const SymMatrix& d) {
  const Eigen::Index n = d.order();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) {
      throw Error(ErrorCode::kInput, "structures",
                  "custom distance matrix must have a zero diagonal");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (d(i, j) < 0) {
        throw Error(ErrorCode::kInput, "structures",
                    "custom distances must be nonnegative");
      }
    }
  }
  // Triangle inequality; the matching equivalences rely on it.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (d(i, j) > d(i, k) + d(k, j) + 1e-9) {
          throw Error(ErrorCode::kInput, "structures",
                      "custom distance matrix violates the triangle "
                      "inequality");
        }
      }
    }
  }
  DistanceMetric m(Kind::kCustom);
  m.custom_ = d;
  return m;
}

std::string DistanceMetric::name() const {
  switch (kind_) {
    case Kind::kEuclidean: return "euclidean";
    case Kind::kMahalanobis: return "mahalanobis";
    case Kind::kCustom: return "custom";
  }
  return "unknown";
}

Matrix sample_covariance_ridged(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) {
    throw Error(ErrorCode::kSingular, "structures",
                "sample covariance needs n >= 2");
  }
  Matrix centered = x.rowwise() - x.colwise().mean();
  Matrix sigma = centered.transpose() * centered / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 1e-12 * std::max(lmax, 1e-300)) {
    const double ridge = 1e-8 * sigma.trace() / double(d);
    if (!(ridge > 0)) {
      throw Error(ErrorCode::kSingular, "structures",
                  "sample covariance is singular and has no trace to ridge");
    }
    sigma += ridge * Matrix::Identity(d, d);
  }
  return sigma;
}

SymMatrix DistanceMetric::pairwise(const CovariateMatrix& x) const {
  const Eigen::Index n = x.n();
  if (kind_ == Kind::kCustom) {
    if (custom_.order() != n) {
      throw Error(ErrorCode::kInput, "structures",
                  "custom distance matrix order does not match n");
    }
    return custom_;
  }
  Matrix d = Matrix::Zero(n, n);
  if (kind_ == Kind::kEuclidean) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = (x.row(i) - x.row(j)).norm();
        d(i, j) = v;
        d(j, i) = v;
      }
    }
    return SymMatrix(d);
  }
  // Mahalanobis: distance in the whitened coordinates.
  Matrix sigma = sample_covariance_ridged(x.mat());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingular, "structures",
                "sample covariance not positive definite after ridge");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Vector diff = (x.row(i) - x.row(j)).transpose();
      const double v = std::sqrt(diff.dot(llt.solve(diff)));
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return SymMatrix(d);
}

SymMatrix pairwise_distances(const DistanceMetric& metric,
                             const CovariateMatrix& x) {
  return metric.pairwise(x);
}

CovariateMatrix normalize_covariates(const CovariateMatrix& x, double divisor) {
  if (!(divisor != 0) || !std::isfinite(divisor)) {
    throw Error(ErrorCode::kInput, "structures",
                "normalization divisor must be finite and nonzero");
  }
  const Eigen::Index n = x.n();
  const Eigen::Index d = x.d();
  if (n <= d) {
    throw Error(ErrorCode::kInput, "structures",
                "normalization requires n > d");
  }
  Matrix centered = x.mat().rowwise() - x.mat().colwise().mean();
  Matrix sigma = sample_covariance_ridged(x.mat());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  Vector inv_roots(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ev = es.eigenvalues()(i);
    inv_roots(i) = ev > 0 ? 1.0 / std::sqrt(ev) : 0.0;
  }
  Matrix w =
      es.eigenvectors() * inv_roots.asDiagonal() * es.eigenvectors().transpose();
  Matrix out = (centered * w) / divisor;

  // Verify the whitening actually took; degenerate inputs (e.g. a constant
  // column) cannot satisfy it even with the ridge.
  Matrix check = out * divisor;
  Matrix cov = check.transpose() * check / double(n - 1);
  if ((cov - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorCode::kSingular, "structures",
                "covariates cannot be whitened (singular sample covariance)");
  }
  return CovariateMatrix(out);
}

std::string structure_id(const StructureSpec& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, RkhsSpec>) {
          return "rkhs:" + v.kernel.name();
        } else if constexpr (std::is_same_v<T, LipschitzSpec>) {
          return "lipschitz:" + v.metric.name();
        } else if constexpr (std::is_same_v<T, LipschitzCappedSpec>) {
          std::ostringstream os;
          os << "lipschitz_capped:" << v.metric.name() << ":delta0=" << v.delta0;
          return os.str();
        } else if constexpr (std::is_same_v<T, LInfinitySpec>) {
          return "linf";
        } else if constexpr (std::is_same_v<T, FiniteDimQSpec>) {
          std::ostringstream os;
          os << "finite_dim_q:q=";
          if (std::isinf(v.q)) {
            os << "inf";
          } else {
            os << v.q;
          }
          os << ":" << v.basis.name();
          return os.str();
        } else {
          return "mahalanobis_linear";
        }
      },
      s);
}

void validate_structure(const StructureSpec& s) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LipschitzCappedSpec>) {
          if (!(v.delta0 > 0)) {
            throw Error(ErrorCode::kInput, "structures",
                        "delta0 must be positive");
          }
        } else if constexpr (std::is_same_v<T, FiniteDimQSpec>) {
          if (v.basis.size() < 1) {
            throw Error(ErrorCode::kInput, "structures", "basis is empty");
          }
          if (!(v.q == 1.0 || v.q == 2.0 || std::isinf(v.q))) {
            throw Error(ErrorCode::kInput, "structures",
                        "q must be 1, 2, or infinity");
          }
        }
      },
      s);
}

}  // namespace balopt
