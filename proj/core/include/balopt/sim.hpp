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

#ifndef BALOPT_SIM_HPP
#define BALOPT_SIM_HPP

#include <functional>
#include <string>
#include <vector>

#include "balopt/inference.hpp"

namespace balopt {

struct VarianceEstimate {
  double value = 0.0;
  double std_err = 0.0;
  long reps = 0;
};

// Adversarial single-covariate construction: signed powers of two plus a
// two-level binary perturbation so the alternating partition is the unique
// minimizer of the group-wise Mahalanobis metric. Outcomes alternate,
// Y_i = (-1)^i. For b <= 4 the uniqueness is verified by enumeration at
// construction time.
std::pair<CovariateMatrix, Vector> example1_construct(int b);

enum class CefKind { kLinear, kQuadratic, kCubic, kSinusoidal };

CefKind cef_from_string(const std::string& name);
std::string cef_name(CefKind kind);

// Conditional-expectation functions of the synthetic study; only the first
// two coordinates of x enter.
double example2_cef(CefKind kind, const Eigen::RowVectorXd& x);

// Conditional variance Var(tau_hat | X, Y) = E[(tau_hat - SATE)^2 | X, Y]
// for m = 2 potential outcomes y_potential (n x 2). Exact enumeration over
// the support when it has at most 10^4 atoms, Monte Carlo otherwise.
VarianceEstimate mc_conditional_variance(const DesignDistribution& design,
                                         const Matrix& y_potential, int reps,
                                         Rng& rng);

// Closed form for complete randomization: (4/(n(n-1))) ||Ybar||^2 with
// Yhat_i = (Y_i1 + Y_i2)/2 centered.
double cr_variance_closed(const Matrix& y_potential);

// Outcome model with analytically known conditional expectations.
struct OutcomeModel {
  std::vector<std::function<double(const Eigen::RowVectorXd&)>> f;  // size m
  double noise_sd = 0.0;
  // Structure norms of the f_k when known; enables the variance bound.
  std::vector<double> f_norms;
};

struct DecompositionReport {
  VarianceEstimate var_sate, var_d, var_e;
  double corr_sate_d = 0.0, corr_d_e = 0.0, corr_sate_e = 0.0;
  double corr_se = 0.0;  // ~ 1/sqrt(reps)
  double identity_max_err = 0.0;
  double mean_tau_minus_sate = 0.0;
  double mean_tau_minus_sate_se = 0.0;
  double bound_rhs = std::numeric_limits<double>::quiet_NaN();
  long reps = 0;
};

// Monte Carlo check of the estimator decomposition tau_hat = SATE + D + E on
// a fixed covariate sample: draws W from the design and fresh noise each
// rep. `m2_opt`, when given together with model.f_norms, fills in the
// right-hand side of the Var(D) bound.
DecompositionReport variance_decomposition_mc(
    const DesignDistribution& design, const OutcomeModel& model,
    const CovariateMatrix& x, int reps, Rng& rng,
    double m2_opt = std::numeric_limits<double>::quiet_NaN());

struct RemRow {
  int p = 0;
  double mean = 0.0;
  double std_err = 0.0;
};

// Mean optimal imbalance E[M^2_p-opt] against p for X ~ N(0, I_d) and the
// monomial basis of degree <= s (with the s-scaling), q-norm structure.
std::vector<RemRow> rem_convergence(int d, int s, double q, int m, int p_min,
                                    int p_max, int reps, std::uint64_t seed,
                                    int threads = 1);

// Least-squares slope and R^2 of y against x.
std::pair<double, double> linear_fit_r2(const std::vector<double>& x,
                                        const std::vector<double>& y);

// Loads the LARS diabetes table: header row then 442 rows of 10 baseline
// covariates and the response.
std::pair<CovariateMatrix, Vector> diabetes_load(const std::string& path);

// The four covariates ranked first by least-angle regression, in rank order.
CovariateMatrix diabetes_top4(const CovariateMatrix& x);

struct RelativeVarianceRow {
  std::string design;
  double variance = 0.0;
  double variance_se = 0.0;
  double ratio = 1.0;  // against complete randomization
  double ratio_se = 0.0;
  long reps = 0;
};

// Example-3 protocol: draw n subjects with replacement, whiten and divide by
// d, apply each design, treat (Y_i1 = Y'_i, Y_i2 = Y'_i - tau), estimate.
// The first design is the baseline for the ratios (use complete
// randomization).
std::vector<RelativeVarianceRow> relative_variance_experiment(
    const CovariateMatrix& pool, const Vector& pool_outcomes,
    const std::vector<DesignSpec>& designs, int n, double tau, int reps,
    std::uint64_t seed, int threads = 1);

struct MarginalVarianceRow {
  std::string design;
  double variance_minus_vn = 0.0;
  double std_err = 0.0;
  long reps = 0;
};

// Example-2 protocol: X ~ Unif[-1,1]^d, constant effect tau, conditional
// expectation from `kind`; reports Var(tau_hat) - V_n per design.
std::vector<MarginalVarianceRow> example2_experiment(
    CefKind kind, int d, int n, const std::vector<DesignSpec>& designs,
    double tau, double noise_sd, int reps, std::uint64_t seed,
    int threads = 1);

// Rank-bins a single covariate into `bins` equal-count levels; the bin index
// becomes the (coarsened) covariate for blocking.
CovariateMatrix rank_bins(const CovariateMatrix& x, int bins);

// The fictitious-data study: conditional variances of complete
// randomization, blocking on eight rank bins, pairwise matching,
// re-randomization at 1%, and the pure Mahalanobis-optimal design (the
// infinitesimal-acceptance limit) on the adversarial construction.
std::vector<std::pair<std::string, VarianceEstimate>> example1_experiment(
    int b, int reps, std::uint64_t seed);

struct PowerRow {
  std::string design;
  std::string test;
  double rejection_rate = 0.0;
  double std_err = 0.0;
  long sims = 0;
};

// Example-4 protocol: quadratic conditional expectation, no noise, constant
// effect tau; bootstrap test for pure-optimal designs and the randomization
// test otherwise.
PowerRow example4_power(const DesignSpec& design, CefKind kind, double tau,
                        int n, int d, int sims, int t, double alpha,
                        std::uint64_t seed, int threads = 1);

}  // namespace balopt

#endif  // BALOPT_SIM_HPP
