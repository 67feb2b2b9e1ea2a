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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "balopt/pure_opt.hpp"

namespace balopt {

namespace {

VarianceEstimate summarize_squares(const std::vector<double>& sq) {
  VarianceEstimate e;
  e.reps = static_cast<long>(sq.size());
  if (sq.empty()) return e;
  const double mean =
      std::accumulate(sq.begin(), sq.end(), 0.0) / double(sq.size());
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  var /= std::max<double>(1.0, double(sq.size()) - 1.0);
  e.value = mean;
  e.std_err = std::sqrt(var / double(sq.size()));
  return e;
}

double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_variance(const std::vector<double>& v) {
  const double mean = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / std::max<double>(1.0, double(v.size()) - 1.0);
}

double sample_corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = sample_mean(a), mb = sample_mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::pair<CovariateMatrix, Vector> example1_construct(int b) {
  if (b < 2) {
    throw Error(ErrorCode::kInput, "sim", "need b >= 2");
  }
  const int n = 1 << b;
  const int half = n / 2;
  Vector x(n), y(n);

  // Base magnitudes: negatives then positives, exponent (i-1) mod n/2.
  for (int i = 1; i <= n; ++i) {
    const int e = (i - 1) % half;
    const double sign = (i <= half) ? -1.0 : 1.0;
    x(i - 1) = sign * std::ldexp(1.0, e);
    y(i - 1) = (i % 2 == 0) ? 1.0 : -1.0;  // Y_i = (-1)^i
  }

  // Level-1 perturbation, shared within consecutive pairs (2j-1, 2j): any
  // assignment splitting some pair unevenly picks up a distinct power of two.
  for (int j = 1; j <= half; ++j) {
    const double tail = std::ldexp(1.0, j - half - 3);
    x(2 * j - 2) += tail;
    x(2 * j - 1) += tail;
  }

  // Level-2 perturbation on the first member of each pair: distinguishes
  // pair-flip patterns. The kappa_j sum to zero and no proper subset does.
  // Skipped for b >= 5 where the scales would exceed double precision.
  if (b <= 4) {
    const double eta2 = std::ldexp(1.0, -n - 4);
    double kappa_last = 0.0;
    for (int j = 1; j < half; ++j) {
      const double kappa = std::ldexp(1.0, j);
      x(2 * j - 2) += eta2 * kappa;
      kappa_last -= kappa;
    }
    x(2 * half - 2) += eta2 * kappa_last;

    // Verify the defining property by enumeration: the alternating
    // assignment is the unique minimizer of |sum u_i X_i| (equivalently of
    // the one-dimensional Mahalanobis metric).
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::vector<int> best_labels;
    for_each_canonical_assignment(n, 2, [&](const std::vector<int>& labels) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += (labels[static_cast<size_t>(i)] == 1 ? 1.0 : -1.0) * x(i);
      const double v = std::abs(s);
      if (v < best) {
        second = best;
        best = v;
        best_labels = labels;
      } else if (v < second) {
        second = v;
      }
    });
    bool alternating = true;
    for (int i = 0; i < n; ++i) {
      if (best_labels[static_cast<size_t>(i)] != (i % 2 == 0 ? 1 : 2)) alternating = false;
    }
    if (!alternating || !(best < second)) {
      throw Error(ErrorCode::kInput, "sim",
                  "example-1 construction failed its uniqueness check");
    }
  }

  Matrix xm(n, 1);
  xm.col(0) = x;
  return {CovariateMatrix(xm), y};
}

CefKind cef_from_string(const std::string& name) {
  if (name == "linear") return CefKind::kLinear;
  if (name == "quadratic") return CefKind::kQuadratic;
  if (name == "cubic") return CefKind::kCubic;
  if (name == "sinusoidal") return CefKind::kSinusoidal;
  throw Error(ErrorCode::kInput, "sim",
              "unknown conditional-expectation kind: " + name);
}

std::string cef_name(CefKind kind) {
  switch (kind) {
    case CefKind::kLinear: return "linear";
    case CefKind::kQuadratic: return "quadratic";
    case CefKind::kCubic: return "cubic";
    case CefKind::kSinusoidal: return "sinusoidal";
  }
  return "unknown";
}

double example2_cef(CefKind kind, const Eigen::RowVectorXd& x) {
  if (x.size() < 2) {
    throw Error(ErrorCode::kInput, "sim",
                "conditional expectations depend on two covariates");
  }
  const double x1 = x(0), x2 = x(1);
  switch (kind) {
    case CefKind::kLinear:
      return x1 - x2;
    case CefKind::kQuadratic:
      return x1 - x2 + x1 * x1 + x2 * x2 - 2.0 * x1 * x2;
    case CefKind::kCubic:
      return x1 - x2 + x1 * x1 + x2 * x2 - 2.0 * x1 * x2 + x1 * x1 * x1 -
             x2 * x2 * x2 - 3.0 * x1 * x1 * x2 + 3.0 * x1 * x2 * x2 * x2;
    case CefKind::kSinusoidal: {
      const double pi = 3.14159265358979323846;
      return std::sin(pi / 3.0 + pi * x1 / 3.0 - 2.0 * pi * x2 / 3.0) -
             6.0 * std::sin(pi * x1 / 3.0 + pi * x2 / 4.0) +
             6.0 * std::sin(pi * x1 / 3.0 + pi * x2 / 6.0);
    }
  }
  throw Error(ErrorCode::kInput, "sim", "unknown kind");
}

VarianceEstimate mc_conditional_variance(const DesignDistribution& design,
                                         const Matrix& y_potential, int reps,
                                         Rng& rng) {
  if (design.m() != 2 || y_potential.cols() != 2 ||
      y_potential.rows() != design.n()) {
    throw Error(ErrorCode::kInput, "sim",
                "need an n x 2 potential-outcome matrix for m = 2");
  }
  const int n = design.n();
  const double sate = (y_potential.col(0) - y_potential.col(1)).mean();
  auto tau_of = [&](const Assignment& w) {
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      if (w.label(i) == 1) s1 += y_potential(i, 0);
      if (w.label(i) == 2) s2 += y_potential(i, 1);
    }
    return s1 / w.p() - s2 / w.p();
  };
  if (design.has_explicit_support() && design.support().size() <= 10000) {
    VarianceEstimate e;
    double acc = 0.0;
    for (const auto& [w, weight] : design.support()) {
      const double d = tau_of(w) - sate;
      acc += weight * d * d;
    }
    e.value = acc;
    e.std_err = 0.0;
    e.reps = static_cast<long>(design.support().size());
    return e;
  }
  std::vector<double> sq(static_cast<size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    Assignment w = design.sample(rng);
    const double d = tau_of(w) - sate;
    sq[static_cast<size_t>(r)] = d * d;
  }
  return summarize_squares(sq);
}

double cr_variance_closed(const Matrix& y_potential) {
  const Eigen::Index n = y_potential.rows();
  if (y_potential.cols() != 2 || n < 2) {
    throw Error(ErrorCode::kInput, "sim", "need an n x 2 matrix, n >= 2");
  }
  Vector yhat = 0.5 * (y_potential.col(0) + y_potential.col(1));
  Vector ybar = yhat.array() - yhat.mean();
  return 4.0 / (double(n) * double(n - 1)) * ybar.squaredNorm();
}

DecompositionReport variance_decomposition_mc(const DesignDistribution& design,
                                              const OutcomeModel& model,
                                              const CovariateMatrix& x,
                                              int reps, Rng& rng,
                                              double m2_opt) {
  const int m = design.m();
  const int n = design.n();
  if (static_cast<int>(model.f.size()) != m) {
    throw Error(ErrorCode::kInput, "sim",
                "model needs one conditional expectation per treatment");
  }
  if (x.n() != n) {
    throw Error(ErrorCode::kInput, "sim", "covariates do not match design");
  }
  // Conditional expectations evaluated once.
  Matrix f_vals(n, m);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      f_vals(i, k) = model.f[static_cast<size_t>(k)](x.row(i));
    }
  }

  const int k1 = 1, k2 = 2;
  std::vector<double> sates, ds, es, tau_minus_sate;
  sates.reserve(static_cast<size_t>(reps));
  double identity_err = 0.0;
  std::normal_distribution<double> noise(0.0, model.noise_sd);
  for (int r = 0; r < reps; ++r) {
    Assignment w = design.sample(rng);
    Matrix eps(n, m);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < m; ++k) {
        eps(i, k) = model.noise_sd > 0 ? noise(rng) : 0.0;
      }
    }
    // Observed estimator.
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      if (w.label(i) == k1) s1 += f_vals(i, k1 - 1) + eps(i, k1 - 1);
      if (w.label(i) == k2) s2 += f_vals(i, k2 - 1) + eps(i, k2 - 1);
    }
    const double tau_hat = (s1 - s2) / double(w.p());

    const double sate =
        ((f_vals.col(k1 - 1) + eps.col(k1 - 1)) -
         (f_vals.col(k2 - 1) + eps.col(k2 - 1)))
            .mean();

    auto b_term = [&](int k, int l, const Vector& values) {
      double sk = 0.0, sl = 0.0;
      for (int i = 0; i < n; ++i) {
        if (w.label(i) == k) sk += values(i);
        if (w.label(i) == l) sl += values(i);
      }
      return (sk - sl) / double(w.p());
    };
    double d_term = 0.0;
    for (int l = 1; l <= m; ++l) {
      if (l != k1) d_term += b_term(k1, l, f_vals.col(k1 - 1));
    }
    for (int l = 1; l <= m; ++l) {
      if (l != k2) d_term -= b_term(k2, l, f_vals.col(k2 - 1));
    }
    d_term /= double(m);

    double e_term = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w1 = w.label(i) == k1 ? 1.0 : 0.0;
      const double w2 = w.label(i) == k2 ? 1.0 : 0.0;
      e_term += (m * w1 - 1.0) * eps(i, k1 - 1) - (m * w2 - 1.0) * eps(i, k2 - 1);
    }
    e_term /= double(n);

    identity_err =
        std::max(identity_err, std::abs(tau_hat - sate - d_term - e_term));
    sates.push_back(sate);
    ds.push_back(d_term);
    es.push_back(e_term);
    tau_minus_sate.push_back(tau_hat - sate);
  }

  DecompositionReport report;
  report.reps = reps;
  report.identity_max_err = identity_err;
  auto var_est = [&](const std::vector<double>& v) {
    VarianceEstimate e;
    e.reps = reps;
    e.value = sample_variance(v);
    // Standard error of a sample variance under approximate normality.
    e.std_err = e.value * std::sqrt(2.0 / std::max(1.0, double(reps) - 1.0));
    return e;
  };
  report.var_sate = var_est(sates);
  report.var_d = var_est(ds);
  report.var_e = var_est(es);
  report.corr_sate_d = sample_corr(sates, ds);
  report.corr_d_e = sample_corr(ds, es);
  report.corr_sate_e = sample_corr(sates, es);
  report.corr_se = 1.0 / std::sqrt(double(reps));
  report.mean_tau_minus_sate = sample_mean(tau_minus_sate);
  report.mean_tau_minus_sate_se =
      std::sqrt(sample_variance(tau_minus_sate) / double(reps));
  if (!std::isnan(m2_opt) && model.f_norms.size() >= 2) {
    const double norms = model.f_norms[0] + model.f_norms[1];
    report.bound_rhs =
        norms * norms / 2.0 * (1.0 - 1.0 / double(m)) * m2_opt;
  }
  return report;
}

std::vector<RemRow> rem_convergence(int d, int s, double q, int m, int p_min,
                                    int p_max, int reps, std::uint64_t seed,
                                    int threads) {
  if (p_min < 2 || p_max < p_min || reps < 2) {
    throw Error(ErrorCode::kInput, "sim", "bad convergence grid");
  }
  BasisSet basis = BasisSet::monomials(d, s, double(s));
  std::vector<RemRow> rows;
  for (int p = p_min; p <= p_max; ++p) {
    const int n = m * p;
    std::vector<double> values(static_cast<size_t>(reps));
    parallel_for(0, reps, threads, [&](long r) {
      Rng rng = make_rng(seed, (static_cast<std::uint64_t>(p) << 32) +
                                   static_cast<std::uint64_t>(r));
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix x(n, d);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
      }
      Matrix phi = basis.matrix(CovariateMatrix(x));
      OptimizerResult opt = finite_q_pure_opt(phi, q, m);
      values[static_cast<size_t>(r)] = opt.value;
    });
    RemRow row;
    row.p = p;
    row.mean = sample_mean(values);
    row.std_err = std::sqrt(sample_variance(values) / double(reps));
    rows.push_back(row);
  }
  return rows;
}

std::pair<double, double> linear_fit_r2(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw Error(ErrorCode::kInput, "sim", "need at least 3 points to fit");
  }
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {slope, r2};
}

std::pair<CovariateMatrix, Vector> diabetes_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInput, "sim", "cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kFormat, "sim", "empty file: " + path);
  }
  auto tokenize = [](const std::string& text) {
    std::vector<std::string> tokens;
    std::string token;
    for (char c : text) {
      if (c == '\t' || c == ' ' || c == ',' || c == '\r') {
        if (!token.empty()) tokens.push_back(token);
        token.clear();
      } else {
        token += c;
      }
    }
    if (!token.empty()) tokens.push_back(token);
    return tokens;
  };
  auto numeric = [](const std::string& t) {
    char* end = nullptr;
    std::strtod(t.c_str(), &end);
    return end != t.c_str() && *end == '\0';
  };
  const auto header = tokenize(line);
  bool all_numeric = !header.empty();
  for (const auto& t : header) all_numeric = all_numeric && numeric(t);
  if (all_numeric) {
    throw Error(ErrorCode::kFormat, "sim",
                "expected a header row naming 10 covariates and the "
                "response; the first line is numeric");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 11) {
      std::ostringstream os;
      os << "expected 11 columns (10 covariates + response), got "
         << tokens.size() << " on data row " << (rows.size() + 1);
      throw Error(ErrorCode::kFormat, "sim", os.str());
    }
    std::vector<double> row;
    for (const auto& t : tokens) {
      if (!numeric(t)) {
        throw Error(ErrorCode::kFormat, "sim", "non-numeric field: " + t);
      }
      row.push_back(std::strtod(t.c_str(), nullptr));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != 442) {
    std::ostringstream os;
    os << "expected 442 data rows, got " << rows.size();
    throw Error(ErrorCode::kFormat, "sim", os.str());
  }
  Matrix x(442, 10);
  Vector y(442);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 10; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
    y(static_cast<Eigen::Index>(i)) = rows[i][10];
  }
  return {CovariateMatrix(x), y};
}

CovariateMatrix diabetes_top4(const CovariateMatrix& x) {
  if (x.d() != 10) {
    throw Error(ErrorCode::kInput, "sim", "expected the 10-covariate table");
  }
  const int cols[4] = {2, 8, 3, 6};  // 1-based {3, 9, 4, 7}
  Matrix sub(x.n(), 4);
  for (int j = 0; j < 4; ++j) sub.col(j) = x.mat().col(cols[j]);
  return CovariateMatrix(sub);
}

std::vector<RelativeVarianceRow> relative_variance_experiment(
    const CovariateMatrix& pool, const Vector& pool_outcomes,
    const std::vector<DesignSpec>& designs, int n, double tau, int reps,
    std::uint64_t seed, int threads) {
  if (pool_outcomes.size() != pool.n()) {
    throw Error(ErrorCode::kInput, "sim", "pool outcomes do not match rows");
  }
  if (n > pool.n() || n <= static_cast<int>(pool.d())) {
    throw Error(ErrorCode::kInput, "sim", "need d < n <= pool size");
  }
  const size_t n_designs = designs.size();
  std::vector<std::vector<double>> taus(n_designs);
  for (auto& t : taus) t.resize(static_cast<size_t>(reps));

  parallel_for(0, reps, threads, [&](long r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.n()) - 1);
    Matrix xr(n, pool.d());
    Vector yr(n);
    for (int i = 0; i < n; ++i) {
      const int idx = pick(rng);
      xr.row(i) = pool.mat().row(idx);
      yr(i) = pool_outcomes(idx);
    }
    CovariateMatrix xn =
        normalize_covariates(CovariateMatrix(xr), double(pool.d()));
    for (size_t di = 0; di < n_designs; ++di) {
      DesignSpec spec = designs[di];
      spec.seed = mix_seed(seed, (di << 32) + static_cast<std::uint64_t>(r));
      DesignDistribution design = build_design(spec, xn);
      Assignment w = design.sample(rng);
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        if (w.label(i) == 1) s1 += yr(i);          // Y_i1 = Y'_i
        if (w.label(i) == 2) s2 += yr(i) - tau;    // Y_i2 = Y'_i - tau
      }
      taus[di][static_cast<size_t>(r)] = (s1 - s2) / double(w.p());
    }
  });

  std::vector<RelativeVarianceRow> rows;
  std::vector<double> vars(n_designs), ses(n_designs);
  for (size_t di = 0; di < n_designs; ++di) {
    vars[di] = sample_variance(taus[di]);
    // Std. error of the variance from the spread of squared deviations.
    const double mean = sample_mean(taus[di]);
    std::vector<double> sq(taus[di].size());
    for (size_t i = 0; i < sq.size(); ++i) {
      sq[i] = (taus[di][i] - mean) * (taus[di][i] - mean);
    }
    ses[di] = std::sqrt(sample_variance(sq) / double(sq.size()));
  }
  for (size_t di = 0; di < n_designs; ++di) {
    RelativeVarianceRow row;
    row.design = design_name(designs[di]);
    row.variance = vars[di];
    row.variance_se = ses[di];
    row.reps = reps;
    if (vars[0] > 0) {
      row.ratio = vars[di] / vars[0];
      const double rel0 = ses[0] / vars[0];
      const double reld = ses[di] / std::max(vars[di], 1e-300);
      row.ratio_se = row.ratio * std::sqrt(rel0 * rel0 + reld * reld);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<MarginalVarianceRow> example2_experiment(
    CefKind kind, int d, int n, const std::vector<DesignSpec>& designs,
    double tau, double noise_sd, int reps, std::uint64_t seed, int threads) {
  if (d < 2) {
    throw Error(ErrorCode::kInput, "sim", "need d >= 2");
  }
  const size_t n_designs = designs.size();
  std::vector<std::vector<double>> taus(n_designs);
  for (auto& t : taus) t.resize(static_cast<size_t>(reps));
  parallel_for(0, reps, threads, [&](long r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, noise_sd);
    Matrix x(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = unif(rng);
    }
    CovariateMatrix cx(x);
    Vector y1(n), y2(n);
    for (int i = 0; i < n; ++i) {
      const double fhat = example2_cef(kind, cx.row(i));
      const double e1 = noise_sd > 0 ? noise(rng) : 0.0;
      const double e2 = noise_sd > 0 ? noise(rng) : 0.0;
      y1(i) = fhat + tau / 2.0 + e1;
      y2(i) = fhat - tau / 2.0 + e2;
    }
    // Blocking acts on the orthant coarsening (d two-level factors).
    Matrix orthant = x.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
    CovariateMatrix corthant(orthant);
    for (size_t di = 0; di < n_designs; ++di) {
      DesignSpec spec = designs[di];
      spec.seed = mix_seed(seed, (di << 32) + static_cast<std::uint64_t>(r));
      const bool blocks = std::holds_alternative<BlockingSpec>(spec.variant);
      DesignDistribution design = build_design(spec, blocks ? corthant : cx);
      Assignment w = design.sample(rng);
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        if (w.label(i) == 1) s1 += y1(i);
        if (w.label(i) == 2) s2 += y2(i);
      }
      taus[di][static_cast<size_t>(r)] = (s1 - s2) / double(w.p());
    }
  });
  const double v_n = 4.0 * noise_sd * noise_sd / double(n);
  std::vector<MarginalVarianceRow> rows;
  for (size_t di = 0; di < n_designs; ++di) {
    MarginalVarianceRow row;
    row.design = design_name(designs[di]);
    row.variance_minus_vn = sample_variance(taus[di]) - v_n;
    const double mean = sample_mean(taus[di]);
    std::vector<double> sq(taus[di].size());
    for (size_t i = 0; i < sq.size(); ++i) {
      sq[i] = (taus[di][i] - mean) * (taus[di][i] - mean);
    }
    row.std_err = std::sqrt(sample_variance(sq) / double(sq.size()));
    row.reps = reps;
    rows.push_back(row);
  }
  return rows;
}

CovariateMatrix rank_bins(const CovariateMatrix& x, int bins) {
  if (x.d() != 1 || bins < 1 || x.n() % bins != 0) {
    throw Error(ErrorCode::kInput, "sim",
                "rank binning needs one covariate and bins dividing n");
  }
  const int n = static_cast<int>(x.n());
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return x.mat()(a, 0) < x.mat()(b, 0); });
  const int per_bin = n / bins;
  Matrix out(n, 1);
  for (int r = 0; r < n; ++r) {
    out(idx[static_cast<size_t>(r)], 0) = static_cast<double>(r / per_bin);
  }
  return CovariateMatrix(out);
}

std::vector<std::pair<std::string, VarianceEstimate>> example1_experiment(
    int b, int reps, std::uint64_t seed) {
  auto [x, y] = example1_construct(b);
  const int n = static_cast<int>(x.n());
  Matrix y_potential(n, 2);
  y_potential.col(0) = y;
  y_potential.col(1) = y;

  std::vector<std::pair<std::string, DesignDistribution>> designs;
  DesignSpec cr{CompleteRandomizationSpec{}, 2, seed};
  designs.emplace_back("complete_randomization", build_design(cr, x));
  if (n >= 8) {
    DesignSpec blocking{BlockingSpec{}, 2, seed};
    designs.emplace_back("blocking",
                         build_design(blocking, rank_bins(x, 8)));
  }
  DesignSpec matching{PairwiseMatchingSpec{DistanceMetric::mahalanobis()}, 2,
                      seed};
  designs.emplace_back("pairwise_matching", build_design(matching, x));
  DesignSpec rerand{RerandomizationSpec{0.01, 2000}, 2, seed};
  designs.emplace_back("rerandomization_1pct", build_design(rerand, x));
  DesignSpec maha{PureOptimalSpec{MahalanobisLinearSpec{}}, 2, seed};
  designs.emplace_back("mahalanobis_pure_opt", build_design(maha, x));

  std::vector<std::pair<std::string, VarianceEstimate>> rows;
  std::uint64_t stream = 1;
  for (auto& [name, design] : designs) {
    Rng rng = make_rng(seed, stream++);
    rows.emplace_back(name,
                      mc_conditional_variance(design, y_potential, reps, rng));
  }
  return rows;
}

PowerRow example4_power(const DesignSpec& design, CefKind kind, double tau,
                        int n, int d, int sims, int t, double alpha,
                        std::uint64_t seed, int threads) {
  const bool use_bootstrap =
      std::holds_alternative<PureOptimalSpec>(design.variant);
  std::vector<char> rejected(static_cast<size_t>(sims), 0);
  parallel_for(0, sims, threads, [&](long s) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Matrix x(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = unif(rng);
    }
    CovariateMatrix cx(x);
    DesignSpec spec = design;
    spec.seed = mix_seed(seed, static_cast<std::uint64_t>(s) + 0x9999);
    DesignDistribution built = build_design(spec, cx);
    Assignment w0 = built.sample(rng);
    Vector observed(n);
    for (int i = 0; i < n; ++i) {
      const double fhat = example2_cef(kind, cx.row(i));
      observed(i) = fhat + (w0.label(i) == 1 ? tau / 2.0 : -tau / 2.0);
    }
    OutcomeTable outcomes{w0, observed};
    TestResult result =
        use_bootstrap
            ? bootstrap_test(cx, spec, outcomes, t, alpha, rng)
            : randomization_test(built, outcomes, t, alpha, rng);
    rejected[static_cast<size_t>(s)] = result.reject ? 1 : 0;
  });
  int rejections = 0;
  for (char c : rejected) rejections += c;
  PowerRow row;
  row.design = design_name(design);
  row.test = use_bootstrap ? "bootstrap" : "randomization";
  row.sims = sims;
  row.rejection_rate = double(rejections) / double(sims);
  row.std_err =
      std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) /
                double(sims));
  return row;
}

}  // namespace balopt
