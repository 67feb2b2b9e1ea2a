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

#include <doctest.h>

using namespace balopt;

namespace {

Matrix random_symmetric(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  }
  return 0.5 * (a + a.transpose());
}

Matrix random_psd(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix b(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) b(i, j) = normal(rng);
  }
  return b * b.transpose();
}

}  // namespace

TEST_CASE("sym_eigen on simple matrices") {
  SUBCASE("identity") {
    Spectrum s = sym_eigen(SymMatrix(Matrix::Identity(3, 3)));
    for (int i = 0; i < 3; ++i) CHECK(s.eigenvalues(i) == doctest::Approx(1.0));
  }
  SUBCASE("diagonal") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    Spectrum s = sym_eigen(SymMatrix(a));
    CHECK(s.eigenvalues(0) == doctest::Approx(3.0));
    CHECK(s.eigenvalues(1) == doctest::Approx(1.0));
    // Axis eigenvectors up to sign.
    CHECK(std::abs(s.eigenvectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(s.eigenvectors(1, 1)) == doctest::Approx(1.0));
  }
  SUBCASE("hand 2x2 characteristic polynomial") {
    Matrix a(2, 2);
    a << 2, 1, 1, 2;
    Spectrum s = sym_eigen(SymMatrix(a));
    CHECK(s.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("non-finite input is rejected") {
    Matrix a(2, 2);
    a << 1, std::numeric_limits<double>::quiet_NaN(), 0, 1;
    CHECK_THROWS_AS(SymMatrix{a}, Error);
  }
}

TEST_CASE("sym_eigen reconstruction and orthonormality") {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    SymMatrix a(random_symmetric(n, rng));
    Spectrum s = sym_eigen(a);
    Matrix rebuilt = s.eigenvectors * s.eigenvalues.asDiagonal() *
                     s.eigenvectors.transpose();
    const double scale = 1.0 + a.mat().cwiseAbs().maxCoeff();
    CHECK((rebuilt - a.mat()).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    Matrix gram = s.eigenvectors.transpose() * s.eigenvectors;
    CHECK((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
    for (int i = 0; i + 1 < n; ++i) {
      CHECK(s.eigenvalues(i) >= s.eigenvalues(i + 1));
    }
  }
}

TEST_CASE("sym_eigen is deterministic") {
  Rng rng = make_rng(11);
  SymMatrix a(random_symmetric(8, rng));
  Spectrum s1 = sym_eigen(a);
  Spectrum s2 = sym_eigen(a);
  CHECK((s1.eigenvalues - s2.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.eigenvectors - s2.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psd_sqrt") {
  SUBCASE("identity") {
    SymMatrix r = psd_sqrt(SymMatrix(Matrix::Identity(4, 4)));
    CHECK((r.mat() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("diagonal") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 4.0;
    a(1, 1) = 9.0;
    SymMatrix r = psd_sqrt(SymMatrix(a));
    CHECK(r(0, 0) == doctest::Approx(2.0));
    CHECK(r(1, 1) == doctest::Approx(3.0));
    CHECK(r(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("rank one") {
    Matrix a(2, 2);
    a << 1, 1, 1, 1;  // x x^T with x = (1, 1)
    SymMatrix r = psd_sqrt(SymMatrix(a));
    const double expect = 1.0 / std::sqrt(2.0);
    CHECK(r(0, 0) == doctest::Approx(expect));
    CHECK(r(0, 1) == doctest::Approx(expect));
    CHECK(r(1, 1) == doctest::Approx(expect));
  }
  SUBCASE("indefinite input is rejected") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(psd_sqrt(SymMatrix(a)), Error);
  }
  SUBCASE("square of the root recovers the input") {
    Rng rng = make_rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 10);
      SymMatrix a(random_psd(n, rng));
      SymMatrix r = psd_sqrt(a);
      const double scale = 1.0 + a.mat().cwiseAbs().maxCoeff();
      CHECK((r.mat() * r.mat() - a.mat()).cwiseAbs().maxCoeff() <=
            1e-6 * scale);
      Spectrum s = sym_eigen(r);
      CHECK(s.lambda_min() >= -1e-10 * scale);
    }
  }
}

TEST_CASE("cholesky_psd") {
  SUBCASE("identity") {
    Matrix l = cholesky_psd(SymMatrix(Matrix::Identity(3, 3)));
    CHECK((l - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("singular diagonal") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 4.0;
    Matrix l = cholesky_psd(SymMatrix(a));
    CHECK((l * l.transpose() - a).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("hand factor") {
    Matrix a(2, 2);
    a << 2, 1, 1, 2;
    Matrix l = cholesky_psd(SymMatrix(a));
    CHECK(l(0, 0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(l(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("factor reproduces random PSD inputs") {
    Rng rng = make_rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 10);
      SymMatrix a(random_psd(n, rng));
      Matrix l = cholesky_psd(a);
      const double scale = 1.0 + a.mat().cwiseAbs().maxCoeff();
      CHECK((l * l.transpose() - a.mat()).cwiseAbs().maxCoeff() <=
            1e-6 * scale);
    }
  }
  SUBCASE("rank-deficient PSD inputs") {
    Rng rng = make_rng(19);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 4 + static_cast<int>(rng() % 6);
      const int r = 1 + static_cast<int>(rng() % 3);
      Matrix b(n, r);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < r; ++j) b(i, j) = normal(rng);
      }
      SymMatrix a{Matrix(b * b.transpose())};
      Matrix l = cholesky_psd(a);
      const double scale = 1.0 + a.mat().cwiseAbs().maxCoeff();
      CHECK((l * l.transpose() - a.mat()).cwiseAbs().maxCoeff() <=
            1e-6 * scale);
    }
  }
  SUBCASE("indefinite input is rejected") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(cholesky_psd(SymMatrix(a)), Error);
  }
}
