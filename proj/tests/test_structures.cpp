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

#include <doctest.h>

#include "balopt/imbalance.hpp"

using namespace balopt;

namespace {

Eigen::RowVectorXd rv(std::initializer_list<double> values) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

CovariateMatrix random_covariates(int n, int d, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return CovariateMatrix(x);
}

Assignment random_balanced(int n, Rng& rng) {
  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = i < n / 2 ? 1 : 2;
  std::shuffle(labels.begin(), labels.end(), rng);
  return Assignment(labels, 2);
}

}  // namespace

TEST_CASE("kernel_eval formulas") {
  CHECK(kernel_eval(Kernel::linear(), rv({1, 2}), rv({3, 4})) ==
        doctest::Approx(11.0));
  CHECK(kernel_eval(Kernel::gaussian(), rv({0.3, -2}), rv({0.3, -2})) ==
        doctest::Approx(1.0));
  CHECK(kernel_eval(Kernel::polynomial(2), rv({1, 0}), rv({0, 1})) ==
        doctest::Approx(1.0));
  CHECK(kernel_eval(Kernel::exponential(), rv({1}), rv({2})) ==
        doctest::Approx(std::exp(2.0)));
  CHECK(kernel_eval(Kernel::gaussian(2.0), rv({0}), rv({2})) ==
        doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(kernel_eval(Kernel::linear(), rv({1, 2}), rv({1})), Error);
}

TEST_CASE("gram_matrix basics") {
  SUBCASE("linear products") {
    Matrix x(2, 1);
    x << 1, -1;
    SymMatrix k = gram_matrix(Kernel::linear(), CovariateMatrix(x));
    CHECK(k(0, 0) == doctest::Approx(1.0));
    CHECK(k(0, 1) == doctest::Approx(-1.0));
    CHECK(k(1, 1) == doctest::Approx(1.0));
  }
  SUBCASE("gaussian unit diagonal") {
    Rng rng = make_rng(3);
    CovariateMatrix x = random_covariates(6, 2, rng);
    SymMatrix k = gram_matrix(Kernel::gaussian(), x);
    for (int i = 0; i < 6; ++i) CHECK(k(i, i) == doctest::Approx(1.0));
  }
  SUBCASE("exponential at the origin") {
    Matrix x = Matrix::Zero(2, 1);
    SymMatrix k = gram_matrix(Kernel::exponential(), CovariateMatrix(x));
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) CHECK(k(i, j) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("gram matrices are PSD up to the clamp tolerance") {
  Rng rng = make_rng(5);
  const Kernel kernels[] = {Kernel::linear(), Kernel::polynomial(2),
                            Kernel::polynomial(3), Kernel::gaussian(),
                            Kernel::exponential()};
  for (const Kernel& kernel : kernels) {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 29);
      const int d = 1 + static_cast<int>(rng() % 3);
      CovariateMatrix x = random_covariates(n, d, rng);
      Spectrum s = sym_eigen(gram_matrix(kernel, x));
      CHECK(s.lambda_min() >= -1e-8 * std::max(s.lambda_max(), 1.0));
    }
  }
}

TEST_CASE("constant kernel shifts do not move the metrics") {
  // Equal group sizes put the metrics in the quotient over constants:
  // K + c 11^T changes neither M_p^2 nor M_m^2.
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + 2 * static_cast<int>(rng() % 4);
    CovariateMatrix x = random_covariates(n, 2, rng);
    SymMatrix k = gram_matrix(Kernel::gaussian(), x);
    // The pure metric is a plain quadratic form: any shift cancels.
    const double c_any = std::uniform_real_distribution<double>(-2.0, 5.0)(rng);
    SymMatrix shifted_any{Matrix(k.mat() + Matrix::Constant(n, n, c_any))};
    Assignment w = random_balanced(n, rng);
    CHECK(mp_rkhs(w, k) ==
          doctest::Approx(mp_rkhs(w, shifted_any)).epsilon(1e-8));

    // The mixed metric goes through sqrt(K): shift by a nonnegative c so the
    // shifted matrix is still a Gram matrix.
    const double c = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
    SymMatrix shifted{Matrix(k.mat() + Matrix::Constant(n, n, c))};

    // Mixed metric through a random two-atom design's P matrix.
    Assignment w2 = random_balanced(n, rng);
    DesignSupport support;
    support.emplace_back(w, 0.5);
    support.emplace_back(w2, 0.5);
    // Symmetrize labels so the P-matrix invariants hold.
    DesignSupport sym;
    for (const auto& [a, weight] : support) {
      std::vector<int> flipped(a.labels());
      for (int& lab : flipped) lab = 3 - lab;
      sym.emplace_back(a, weight / 2);
      sym.emplace_back(Assignment(flipped, 2), weight / 2);
    }
    PMatrix p = p_matrix_of_support(sym, 2);
    const double shifted_mm = mm_rkhs(p, shifted, n, n / 2);
    CHECK(mm_rkhs(p, k, n, n / 2) ==
          doctest::Approx(shifted_mm).epsilon(1e-8));
  }
}

TEST_CASE("pairwise distances") {
  SUBCASE("euclidean") {
    Matrix x(2, 1);
    x << 0, 3;
    SymMatrix d =
        pairwise_distances(DistanceMetric::euclidean(), CovariateMatrix(x));
    CHECK(d(0, 1) == doctest::Approx(3.0));
    CHECK(d(0, 0) == doctest::Approx(0.0));
    CHECK(d(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("mahalanobis equals euclidean on whitened data") {
    Rng rng = make_rng(21);
    CovariateMatrix raw = random_covariates(12, 3, rng);
    CovariateMatrix white = normalize_covariates(raw, 1.0);
    SymMatrix dm = pairwise_distances(DistanceMetric::mahalanobis(), white);
    SymMatrix de = pairwise_distances(DistanceMetric::euclidean(), white);
    CHECK((dm.mat() - de.mat()).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("mahalanobis is affine invariant") {
    Rng rng = make_rng(23);
    CovariateMatrix x = random_covariates(10, 2, rng);
    Matrix a(2, 2);
    a << 2, 1, -1, 3;  // invertible
    Eigen::RowVectorXd shift = rv({5, -7});
    Matrix transformed = (x.mat() * a.transpose()).rowwise() + shift;
    SymMatrix d1 = pairwise_distances(DistanceMetric::mahalanobis(), x);
    SymMatrix d2 = pairwise_distances(DistanceMetric::mahalanobis(),
                                      CovariateMatrix(transformed));
    CHECK((d1.mat() - d2.mat()).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("custom matrices are validated") {
    Matrix good(3, 3);
    good << 0, 1, 2, 1, 0, 1, 2, 1, 0;
    CHECK_NOTHROW(DistanceMetric::custom(SymMatrix(good)));
    Matrix bad = good;
    bad(0, 2) = 5.0;  // violates the triangle inequality via 0-1-2
    bad(2, 0) = 5.0;
    CHECK_THROWS_AS(DistanceMetric::custom(SymMatrix(bad)), Error);
    Matrix negative = good;
    negative(0, 1) = -1.0;
    negative(1, 0) = -1.0;
    CHECK_THROWS_AS(DistanceMetric::custom(SymMatrix(negative)), Error);
    Matrix diag = good;
    diag(1, 1) = 0.5;
    CHECK_THROWS_AS(DistanceMetric::custom(SymMatrix(diag)), Error);
  }
}

TEST_CASE("monomial bases") {
  SUBCASE("degree one in one dimension") {
    BasisSet b = BasisSet::monomials(1, 1);
    Matrix x(1, 1);
    x << 2;
    Matrix phi = basis_matrix(b, CovariateMatrix(x));
    REQUIRE(phi.cols() == 2);
    CHECK(phi(0, 0) == doctest::Approx(1.0));
    CHECK(phi(0, 1) == doctest::Approx(2.0));
  }
  SUBCASE("degree two in one dimension") {
    BasisSet b = BasisSet::monomials(1, 2);
    Matrix x(1, 1);
    x << 3;
    Matrix phi = basis_matrix(b, CovariateMatrix(x));
    REQUIRE(phi.cols() == 3);
    // Terms in graded order: 1, x, x^2.
    CHECK(phi(0, 0) == doctest::Approx(1.0));
    CHECK(phi.row(0).sum() == doctest::Approx(1.0 + 3.0 + 9.0));
    CHECK(phi.row(0).maxCoeff() == doctest::Approx(9.0));
  }
  SUBCASE("counting: r = C(d+s, s)") {
    CHECK(BasisSet::monomials(2, 2).size() == 6);
    CHECK(BasisSet::monomials(3, 3).size() == 20);
  }
  SUBCASE("s-scaling multiplies by s^(1-|t|)") {
    BasisSet b = BasisSet::monomials(1, 2, 2.0);
    Matrix x(1, 1);
    x << 3;
    Matrix phi = basis_matrix(b, CovariateMatrix(x));
    // 2^1 * 1, 2^0 * 3, 2^-1 * 9
    CHECK(phi(0, 0) == doctest::Approx(2.0));
    CHECK(phi(0, 1) == doctest::Approx(3.0));
    CHECK(phi(0, 2) == doctest::Approx(4.5));
  }
}

TEST_CASE("normalize_covariates") {
  SUBCASE("already-white data is unchanged") {
    Matrix x(3, 1);
    x << -1, 0, 1;  // mean 0, sample variance 1
    CovariateMatrix out = normalize_covariates(CovariateMatrix(x), 1.0);
    CHECK((out.mat() - x).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("two points scale to unit sample variance") {
    Matrix x(2, 1);
    x << 0, 2;  // centered (-1, 1), sample sd sqrt(2)
    CovariateMatrix out = normalize_covariates(CovariateMatrix(x), 1.0);
    CHECK(out.mat()(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(out.mat()(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CovariateMatrix scaled = normalize_covariates(CovariateMatrix(x), 2.0);
    CHECK(scaled.mat()(1, 0) == doctest::Approx(0.5 / std::sqrt(2.0)));
  }
  SUBCASE("whitens mean and covariance") {
    Rng rng = make_rng(29);
    CovariateMatrix x = random_covariates(40, 3, rng, 4.0);
    CovariateMatrix out = normalize_covariates(x, 1.0);
    CHECK(out.mat().colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
    Matrix cov = out.mat().transpose() * out.mat() / 39.0;
    CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("constant column fails") {
    Matrix x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    CHECK_THROWS_AS(normalize_covariates(CovariateMatrix(x), 1.0), Error);
  }
}

TEST_CASE("structure ids and validation") {
  CHECK(structure_id(LInfinitySpec{}) == "linf");
  CHECK(structure_id(RkhsSpec{Kernel::linear()}) == "rkhs:linear");
  CHECK_THROWS_AS(validate_structure(LipschitzCappedSpec{
                      DistanceMetric::euclidean(), -1.0}),
                  Error);
  FiniteDimQSpec bad{BasisSet::monomials(1, 1), 3.0};
  CHECK_THROWS_AS(validate_structure(StructureSpec{bad}), Error);
}
