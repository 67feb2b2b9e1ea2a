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

#include "balopt/sim.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "balopt/pure_opt.hpp"

using namespace balopt;

namespace {

Eigen::RowVectorXd rv(std::initializer_list<double> values) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

std::string data_path(const std::string& name) {
  return std::string(BALOPT_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("example1_construct") {
  for (int b : {2, 3, 4}) {
    auto [x, y] = example1_construct(b);
    const int n = 1 << b;
    REQUIRE(x.n() == n);
    SUBCASE("outcomes alternate") {
      for (int i = 0; i < n; ++i) {
        CHECK(y(i) == doctest::Approx(i % 2 == 0 ? -1.0 : 1.0));
      }
    }
    SUBCASE("rounded magnitudes are signed powers of two") {
      std::multiset<double> rounded;
      int negatives = 0;
      for (int i = 0; i < n; ++i) {
        rounded.insert(std::round(std::abs(x.mat()(i, 0))));
        negatives += x.mat()(i, 0) < 0;
      }
      CHECK(negatives == n / 2);
      for (int e = 0; e < n / 2; ++e) {
        CHECK(rounded.count(std::ldexp(1.0, e)) == 2);
      }
    }
  }
  // The uniqueness check runs inside the constructor for b <= 4; reaching
  // here means it passed.
  CHECK_THROWS_AS(example1_construct(1), Error);
}

TEST_CASE("example1 alternating assignment is the Mahalanobis optimum") {
  auto [x, y] = example1_construct(4);
  // Strict uniqueness of the minimizer (the construction validates this too;
  // the margin is far below the generic exhaustive tie window, so compare
  // exactly on the group-sum scale).
  double best = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  for_each_canonical_assignment(16, 2, [&](const std::vector<int>& labels) {
    double s = 0.0;
    for (int i = 0; i < 16; ++i) {
      s += (labels[static_cast<size_t>(i)] == 1 ? 1.0 : -1.0) * x.mat()(i, 0);
    }
    const double v = std::abs(s);
    if (v < best) {
      second = best;
      best = v;
      best_labels = labels;
    } else if (v < second) {
      second = v;
    }
  });
  CHECK(best < second);
  for (int i = 0; i < 16; ++i) {
    CHECK(best_labels[static_cast<size_t>(i)] == (i % 2 == 0 ? 1 : 2));
  }
  // The pure-optimal design lands on exactly that partition (the quadratic
  // solver separates the scales even though they are below 1e-9).
  DesignSpec spec{PureOptimalSpec{MahalanobisLinearSpec{}}, 2, 1};
  DesignDistribution d = build_design(spec, x);
  REQUIRE(d.support().size() == 2);
  for (int i = 0; i < 16; ++i) {
    CHECK(d.support().front().first.label(i) == (i % 2 == 0 ? 1 : 2));
  }
}

TEST_CASE("example2_cef") {
  CHECK(example2_cef(CefKind::kLinear, rv({1, 0.5})) == doctest::Approx(0.5));
  CHECK(example2_cef(CefKind::kQuadratic, rv({1, 1})) == doctest::Approx(0.0));
  CHECK(example2_cef(CefKind::kSinusoidal, rv({0, 0})) ==
        doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK(example2_cef(CefKind::kCubic, rv({1, 0})) ==
        doctest::Approx(1 + 1 + 1));  // x1 - x2 + x1^2 + x1^3 at (1, 0)
  // Extra covariates are ignored.
  CHECK(example2_cef(CefKind::kLinear, rv({1, 0.5, 9, -9})) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(example2_cef(CefKind::kLinear, rv({1})), Error);
  CHECK(cef_from_string("sinusoidal") == CefKind::kSinusoidal);
  CHECK_THROWS_AS(cef_from_string("quartic"), Error);
}

TEST_CASE("conditional variance estimates") {
  SUBCASE("point mass is exact") {
    std::vector<int> labels{1, 2, 1, 2};
    Assignment w(labels, 2);
    DesignDistribution d = point_mass_design(w);
    Matrix y(4, 2);
    y.col(0) << 3, 1, 4, 1;
    y.col(1) << 2, 0, 0, 5;
    Rng rng = make_rng(61);
    VarianceEstimate est = mc_conditional_variance(d, y, 10, rng);
    // (2/n sum u_i yhat_i)^2 with yhat the average potential outcome.
    Vector yhat = 0.5 * (y.col(0) + y.col(1));
    Vector u = w.signed_vector();
    const double expect = std::pow(2.0 / 4.0 * u.dot(yhat), 2);
    CHECK(est.value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(est.std_err == 0.0);
  }
  SUBCASE("complete randomization matches the closed form exactly") {
    Matrix x(6, 1);
    x << 1, 2, 3, 4, 5, 6;
    DesignDistribution cr =
        build_design({CompleteRandomizationSpec{}, 2, 1}, CovariateMatrix(x));
    Matrix y(6, 2);
    y.col(0) << 1, -2, 0.5, 3, 2, -1;
    y.col(1) << 0, 1, 2, -1, 0.5, 4;
    Rng rng = make_rng(67);
    VarianceEstimate est = mc_conditional_variance(cr, y, 10, rng);
    CHECK(est.std_err == 0.0);  // enumerated exactly
    CHECK(est.value == doctest::Approx(cr_variance_closed(y)).epsilon(1e-10));
  }
  SUBCASE("constant average potential outcome is free") {
    Matrix y(4, 2);
    y.col(0) << 2, 3, 4, 5;
    y.col(1) << 4, 3, 2, 1;  // yhat = 3 everywhere
    std::vector<int> labels{1, 1, 2, 2};
    DesignDistribution d = point_mass_design(Assignment(labels, 2));
    Rng rng = make_rng(71);
    CHECK(mc_conditional_variance(d, y, 10, rng).value ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("cr_variance_closed") {
  SUBCASE("adversarial data gives 4/(n-1)") {
    auto [x, y] = example1_construct(3);
    Matrix yp(8, 2);
    yp.col(0) = y;
    yp.col(1) = y;
    CHECK(cr_variance_closed(yp) == doctest::Approx(4.0 / 7.0));
  }
  SUBCASE("constant averages vanish") {
    Matrix yp = Matrix::Constant(6, 2, 2.5);
    CHECK(cr_variance_closed(yp) == doctest::Approx(0.0));
  }
  SUBCASE("hand value and enumeration") {
    Matrix yp(4, 2);
    yp.col(0) << 1, 2, 3, 4;
    yp.col(1) << 1, 2, 3, 4;
    // ||Ybar||^2 = 5 around mean 2.5 -> 4/(4*3) * 5 = 5/3.
    CHECK(cr_variance_closed(yp) == doctest::Approx(5.0 / 3.0));
    Matrix x(4, 1);
    x << 1, 2, 3, 4;
    DesignDistribution cr =
        build_design({CompleteRandomizationSpec{}, 2, 1}, CovariateMatrix(x));
    Rng rng = make_rng(73);
    CHECK(mc_conditional_variance(cr, yp, 10, rng).value ==
          doctest::Approx(5.0 / 3.0).epsilon(1e-10));
  }
}

TEST_CASE("variance decomposition") {
  Rng rng = make_rng(79);
  Matrix x(8, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
  }
  CovariateMatrix cx(x);

  SUBCASE("identity holds to 1e-10 and terms decorrelate") {
    OutcomeModel model;
    model.f.push_back([](const Eigen::RowVectorXd& r) { return r(0) + 2 * r(1); });
    model.f.push_back([](const Eigen::RowVectorXd& r) { return r(0) - r(1); });
    model.noise_sd = 0.5;
    DesignDistribution cr = build_design({CompleteRandomizationSpec{}, 2, 1}, cx);
    DecompositionReport report =
        variance_decomposition_mc(cr, model, cx, 4000, rng);
    CHECK(report.identity_max_err <= 1e-10);
    CHECK(std::abs(report.corr_sate_d) <= 4 * report.corr_se);
    CHECK(std::abs(report.corr_d_e) <= 4 * report.corr_se);
    CHECK(std::abs(report.corr_sate_e) <= 4 * report.corr_se);
    CHECK(std::abs(report.mean_tau_minus_sate) <=
          4 * report.mean_tau_minus_sate_se);
  }
  SUBCASE("constant conditional expectations kill the design term") {
    OutcomeModel model;
    model.f.push_back([](const Eigen::RowVectorXd&) { return 1.0; });
    model.f.push_back([](const Eigen::RowVectorXd&) { return -1.0; });
    model.noise_sd = 1.0;
    DesignDistribution cr = build_design({CompleteRandomizationSpec{}, 2, 1}, cx);
    DecompositionReport report =
        variance_decomposition_mc(cr, model, cx, 1000, rng);
    CHECK(report.var_d.value == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("variance bound for the pure-optimal design") {
    // Linear conditional expectations in the linear-kernel structure.
    Vector beta1 = rv({1.0, 0.5}).transpose();
    Vector beta2 = rv({0.5, -0.5}).transpose();
    OutcomeModel model;
    model.f.push_back([beta1](const Eigen::RowVectorXd& r) {
      return r * beta1;
    });
    model.f.push_back([beta2](const Eigen::RowVectorXd& r) {
      return r * beta2;
    });
    model.noise_sd = 0.3;
    model.f_norms = {beta1.norm(), beta2.norm()};
    DesignSpec spec{PureOptimalSpec{RkhsSpec{Kernel::linear()}}, 2, 1};
    DesignDistribution design = build_design(spec, cx);
    SymMatrix k = gram_matrix(Kernel::linear(), cx);
    const double m2_opt = mp_rkhs(design.support().front().first, k);
    DecompositionReport report =
        variance_decomposition_mc(design, model, cx, 4000, rng, m2_opt);
    CHECK(report.bound_rhs ==
          doctest::Approx(std::pow(beta1.norm() + beta2.norm(), 2) / 2.0 *
                          0.5 * m2_opt));
    CHECK(report.var_d.value <= report.bound_rhs + 4 * report.var_d.std_err);
  }
}

TEST_CASE("rem convergence decreases in p") {
  auto rows = rem_convergence(1, 1, 2.0, 2, 4, 7, 40, 2026);
  REQUIRE(rows.size() == 4);
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i + 1].mean < rows[i].mean);
  }
  // log2 of the means falls approximately linearly.
  std::vector<double> ps, logs;
  for (const auto& row : rows) {
    ps.push_back(row.p);
    logs.push_back(std::log2(row.mean));
  }
  auto [slope, r2] = linear_fit_r2(ps, logs);
  CHECK(slope < 0.0);
  CHECK(r2 >= 0.8);
}

TEST_CASE("linear_fit_r2 on an exact line") {
  std::vector<double> xs{1, 2, 3, 4};
  std::vector<double> ys{3, 5, 7, 9};
  auto [slope, r2] = linear_fit_r2(xs, ys);
  CHECK(slope == doctest::Approx(2.0));
  CHECK(r2 == doctest::Approx(1.0));
}

TEST_CASE("diabetes loader") {
  SUBCASE("the shipped table parses") {
    auto [x, y] = diabetes_load(data_path("diabetes.tab"));
    CHECK(x.n() == 442);
    CHECK(x.d() == 10);
    CHECK(y.size() == 442);
    CovariateMatrix top4 = diabetes_top4(x);
    CHECK(top4.d() == 4);
    // Column order {3, 9, 4, 7}: BMI, S5, BP, S4.
    CHECK(top4.mat()(0, 0) == doctest::Approx(x.mat()(0, 2)));
    CHECK(top4.mat()(0, 1) == doctest::Approx(x.mat()(0, 8)));
    CHECK(top4.mat()(0, 2) == doctest::Approx(x.mat()(0, 3)));
    CHECK(top4.mat()(0, 3) == doctest::Approx(x.mat()(0, 6)));
  }
  SUBCASE("missing header is a format error") {
    const std::string tmp = "headerless.tab";
    std::ofstream out(tmp);
    for (int i = 0; i < 442; ++i) {
      for (int j = 0; j < 11; ++j) out << (j ? "\t" : "") << j + i;
      out << "\n";
    }
    out.close();
    CHECK_THROWS_AS(diabetes_load(tmp), Error);
    std::remove(tmp.c_str());
  }
  SUBCASE("wrong column count is a format error") {
    const std::string tmp = "narrow.tab";
    std::ofstream out(tmp);
    out << "A\tB\tC\n1\t2\t3\n";
    out.close();
    CHECK_THROWS_AS(diabetes_load(tmp), Error);
    std::remove(tmp.c_str());
  }
  SUBCASE("wrong row count is a format error") {
    const std::string tmp = "short.tab";
    std::ofstream out(tmp);
    out << "A B C D E F G H I J Y\n";
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 11; ++j) out << (j ? " " : "") << j;
      out << "\n";
    }
    out.close();
    CHECK_THROWS_AS(diabetes_load(tmp), Error);
    std::remove(tmp.c_str());
  }
}

TEST_CASE("rank binning") {
  Matrix x(8, 1);
  x << 5, -3, 10, 0, 7, -8, 2, 1;
  CovariateMatrix binned = rank_bins(CovariateMatrix(x), 4);
  // Sorted: -8 -3 | 0 1 | 2 5 | 7 10.
  CHECK(binned.mat()(5, 0) == 0);  // -8
  CHECK(binned.mat()(1, 0) == 0);  // -3
  CHECK(binned.mat()(3, 0) == 1);  // 0
  CHECK(binned.mat()(2, 0) == 3);  // 10
}

TEST_CASE("example1_experiment quick run matches the closed forms loosely") {
  // Full-precision reproduction lives in the acceptance suite; this checks
  // wiring at b = 3 (n = 8): CR = 4/7, matching = 1, optimum = 4.
  auto rows = example1_experiment(3, 20000, 4);
  double cr = -1, matching = -1, maha = -1;
  for (const auto& [name, est] : rows) {
    if (name == "complete_randomization") cr = est.value;
    if (name == "pairwise_matching") matching = est.value;
    if (name == "mahalanobis_pure_opt") maha = est.value;
  }
  CHECK(cr == doctest::Approx(4.0 / 7.0).epsilon(0.05));
  CHECK(matching == doctest::Approx(1.0).epsilon(0.01));
  CHECK(maha == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("relative variance experiment smoke") {
  auto [pool, outcomes] = diabetes_load(data_path("diabetes.tab"));
  CovariateMatrix top4 = diabetes_top4(pool);
  std::vector<DesignSpec> designs;
  designs.push_back({CompleteRandomizationSpec{}, 2, 1});
  designs.push_back({PureOptimalSpec{RkhsSpec{Kernel::linear()}}, 2, 1});
  auto rows =
      relative_variance_experiment(top4, outcomes, designs, 12, 5.0, 300, 9);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ratio == doctest::Approx(1.0));
  CHECK(rows[1].ratio > 0.0);
  CHECK(rows[1].ratio < 1.0 + 3 * rows[1].ratio_se);
  CHECK(std::isfinite(rows[1].ratio_se));
}
