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

#include "balopt/mixed_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace balopt {

void SimplexWeights::validate() const {
  if (theta.size() == 0) {
    throw Error(ErrorCode::kInput, "mixed_opt", "empty simplex weights");
  }
  if (theta.minCoeff() < -1e-10) {
    throw Error(ErrorCode::kInput, "mixed_opt", "weights must be nonnegative");
  }
  if (std::abs(theta.sum() - 1.0) > 1e-10) {
    throw Error(ErrorCode::kInput, "mixed_opt", "weights must sum to one");
  }
}

namespace {

struct TopEig {
  double value;
  Vector vector;
};

TopEig top_eig(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()));
  const Eigen::Index last = es.eigenvalues().size() - 1;
  return {es.eigenvalues()(last), es.eigenvectors().col(last)};
}

void check_candidates(const SymMatrix& k, const std::vector<Vector>& us) {
  const Eigen::Index n = k.order();
  if (us.empty()) {
    throw Error(ErrorCode::kInput, "mixed_opt", "need at least one candidate");
  }
  for (const Vector& u : us) {
    if (u.size() != n) {
      throw Error(ErrorCode::kInput, "mixed_opt",
                  "candidate length does not match K");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u(i) != 1.0 && u(i) != -1.0) {
        throw Error(ErrorCode::kInput, "mixed_opt",
                    "candidates must be sign vectors");
      }
      sum += u(i);
    }
    if (sum != 0.0) {
      throw Error(ErrorCode::kInput, "mixed_opt",
                  "candidates must be balanced");
    }
  }
}

}  // namespace

Algorithm2Result algorithm2_weights(const SymMatrix& k,
                                    const std::vector<Vector>& us, double rho,
                                    const MixedSolveOptions& opts) {
  check_candidates(k, us);
  const int n = static_cast<int>(k.order());
  const int t_count = static_cast<int>(us.size());
  if (rho < 1.0) {
    throw Error(ErrorCode::kInput, "mixed_opt", "rho must be at least 1");
  }
  // trace(sum theta u u^T) = n over at most T nonzero eigenvalues, so the
  // constraint value is at least (n-1)/T for any weights.
  const double ratio_floor = double(n - 1) / double(t_count);
  if (rho < ratio_floor - 1e-12) {
    throw Error(ErrorCode::kInfeasible, "mixed_opt",
                "rho is below (n-1)/T; no mixture of T assignments can "
                "satisfy the worst-case-ratio constraint");
  }

  SymMatrix root = psd_sqrt(k);
  Matrix y(n, t_count), u_mat(n, t_count);
  for (int t = 0; t < t_count; ++t) {
    u_mat.col(t) = us[static_cast<size_t>(t)];
    y.col(t) = root.mat() * us[static_cast<size_t>(t)];
  }
  const Matrix gy = y.transpose() * y;
  const Matrix gu = u_mat.transpose() * u_mat;
  const double ratio_scale = 1.0 - 1.0 / double(n);

  // lambda_max(M diag(theta) M^T) and its gradient in theta via the T x T
  // compression diag(sqrt(theta)) G diag(sqrt(theta)).
  auto eval = [&](const Matrix& g, const Vector& theta, Vector* grad) {
    Vector r = theta.cwiseMax(0.0).cwiseSqrt();
    Matrix b = r.asDiagonal() * g * r.asDiagonal();
    TopEig e = top_eig(b);
    if (grad) {
      grad->setZero(t_count);
      if (e.value > 0) {
        Vector gz = g * (r.cwiseProduct(e.vector));
        for (int t = 0; t < t_count; ++t) {
          const double dot = gz(t);
          (*grad)(t) = dot * dot / e.value;
        }
      }
    }
    return std::max(e.value, 0.0);
  };

  auto objective = [&](const Vector& theta, Vector* grad) {
    return eval(gy, theta, grad);
  };
  auto constraint = [&](const Vector& theta, Vector* grad) {
    const double v = eval(gu, theta, grad);
    if (grad) *grad *= ratio_scale;
    return ratio_scale * v;
  };

  const bool constrained = std::isfinite(rho);
  Vector best_theta = Vector::Constant(t_count, 1.0 / t_count);
  double best_obj = std::numeric_limits<double>::infinity();
  bool have_feasible = false;
  double best_violation = std::numeric_limits<double>::infinity();

  auto consider = [&](const Vector& theta) {
    const double c = constrained ? constraint(theta, nullptr) : 0.0;
    const double violation = constrained ? std::max(0.0, c - rho) : 0.0;
    const double obj = objective(theta, nullptr);
    if (violation <= opts.tolerance) {
      if (!have_feasible || obj < best_obj) {
        have_feasible = true;
        best_obj = obj;
        best_theta = theta;
      }
    } else if (!have_feasible && violation < best_violation) {
      best_violation = violation;
      best_theta = theta;
      best_obj = obj;
    }
  };

  double scale = std::max(gy.diagonal().maxCoeff(), 1e-12);
  double mu = scale;
  const int rounds = constrained ? 8 : 1;
  for (int round = 0; round < rounds; ++round) {
    Vector theta = Vector::Constant(t_count, 1.0 / t_count);
    consider(theta);
    for (int it = 0; it < opts.max_iterations; ++it) {
      Vector g_obj, g_con;
      const double f = objective(theta, &g_obj);
      (void)f;
      Vector g = g_obj;
      if (constrained) {
        const double c = constraint(theta, &g_con);
        if (c > rho) g += mu * g_con;
      }
      const double gmax = g.cwiseAbs().maxCoeff();
      if (gmax <= 0) break;
      const double step = 1.0 / (std::sqrt(it + 1.0) * gmax);
      for (int t = 0; t < t_count; ++t) {
        theta(t) = theta(t) * std::exp(-step * g(t));
      }
      const double z = theta.sum();
      if (!(z > 0)) {
        theta = Vector::Constant(t_count, 1.0 / t_count);
        continue;
      }
      theta /= z;
      consider(theta);
    }
    if (have_feasible) break;
    mu *= 2.0;
  }

  // A feasible point mass can only exist when a single assignment satisfies
  // the ratio constraint; it is then a legitimate benchmark to beat.
  const double vertex_ratio = ratio_scale * n;  // lambda_max(u u^T) = n
  if (!constrained || vertex_ratio <= rho + opts.tolerance) {
    int best_vertex = 0;
    for (int t = 1; t < t_count; ++t) {
      if (gy(t, t) < gy(best_vertex, best_vertex)) best_vertex = t;
    }
    if (!have_feasible || gy(best_vertex, best_vertex) < best_obj) {
      best_theta = Vector::Zero(t_count);
      best_theta(best_vertex) = 1.0;
      best_obj = gy(best_vertex, best_vertex);
      have_feasible = true;
    }
  }

  Algorithm2Result result;
  result.weights.theta = best_theta;
  result.weights.validate();
  result.objective = objective(best_theta, nullptr);
  result.constraint_value = constrained ? constraint(best_theta, nullptr)
                                        : ratio_scale * eval(gu, best_theta, nullptr);
  result.feasible =
      !constrained || result.constraint_value <= rho + opts.tolerance;
  result.converged = have_feasible;
  return result;
}

namespace {

Matrix project_spectral_box(const Matrix& p, double cap) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.transpose()));
  Vector lam = es.eigenvalues().cwiseMax(0.0);
  if (std::isfinite(cap)) lam = lam.cwiseMin(cap);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Matrix project_diag_one(const Matrix& p) {
  Matrix out = p;
  out.diagonal().setOnes();
  return out;
}

Matrix project_row_space(const Matrix& p) {
  const Eigen::Index n = p.rows();
  Matrix q = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / double(n));
  return q * p * q;
}

// Dykstra's alternating projections onto the intersection of the spectral
// box, {diag = e}, and {Pe = 0}.
Matrix dykstra_project(const Matrix& input, double cap, int sweeps,
                       double tol) {
  Matrix x = input;
  Matrix inc_a = Matrix::Zero(x.rows(), x.cols());
  Matrix inc_b = inc_a, inc_c = inc_a;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const Matrix prev = x;
    Matrix y = project_spectral_box(x + inc_a, cap);
    inc_a = x + inc_a - y;
    x = y;
    y = project_diag_one(x + inc_b);
    inc_b = x + inc_b - y;
    x = y;
    y = project_row_space(x + inc_c);
    inc_c = x + inc_c - y;
    x = y;
    if ((x - prev).cwiseAbs().maxCoeff() < 0.01 * tol) break;
  }
  return x;
}

}  // namespace

Algorithm1Result algorithm1_pmatrix(const SymMatrix& k, double rho,
                                    const MixedSolveOptions& opts) {
  const int n = static_cast<int>(k.order());
  if (n < 2) {
    throw Error(ErrorCode::kInput, "mixed_opt", "need n >= 2");
  }
  if (rho < 1.0) {
    throw Error(ErrorCode::kInput, "mixed_opt", "rho must be at least 1");
  }
  const double ratio_scale = 1.0 - 1.0 / double(n);
  const double cap = std::isfinite(rho)
                         ? rho / ratio_scale
                         : std::numeric_limits<double>::infinity();
  SymMatrix root = psd_sqrt(k);

  auto objective = [&](const Matrix& p, Vector* top_vec) {
    TopEig e = top_eig(root.mat() * p * root.mat());
    if (top_vec) *top_vec = e.vector;
    return std::max(e.value, 0.0);
  };
  auto is_feasible = [&](const Matrix& p) {
    if ((p.diagonal() - Vector::Ones(n)).cwiseAbs().maxCoeff() > opts.tolerance)
      return false;
    if ((p * Vector::Ones(n)).cwiseAbs().maxCoeff() > opts.tolerance * n)
      return false;
    TopEig e = top_eig(p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.transpose()));
    if (es.eigenvalues().minCoeff() < -opts.tolerance) return false;
    if (std::isfinite(cap) && e.value > cap + opts.tolerance) return false;
    return true;
  };

  // Complete randomization is feasible for every rho >= 1 and is the
  // benchmark the heuristic must not lose to.
  Matrix p_cr = (double(n) / double(n - 1)) *
                (Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n));
  Matrix p = p_cr;
  Matrix best = p_cr;
  double best_obj = objective(p_cr, nullptr);

  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector v;
    const double obj = objective(p, &v);
    if (obj < best_obj && is_feasible(p)) {
      best_obj = obj;
      best = p;
    }
    Vector rv = root.mat() * v;
    Matrix grad = rv * rv.transpose();
    const double gnorm = grad.norm();
    if (gnorm <= 0) break;
    const double step = std::sqrt(double(n)) / (gnorm * std::sqrt(it + 1.0));
    p = dykstra_project(p - step * grad, cap, opts.dykstra_sweeps,
                        opts.tolerance);
  }
  const double final_obj = objective(p, nullptr);
  if (final_obj < best_obj && is_feasible(p)) {
    best_obj = final_obj;
    best = p;
  }

  Algorithm1Result result;
  result.p_hat = PMatrix{SymMatrix(best)};
  result.objective = best_obj;
  result.constraint_value = ratio_scale * top_eig(best).value;
  result.feasible = is_feasible(best);
  result.converged = true;
  return result;
}

Assignment sample_sign_gaussian(const PMatrix& p_hat, Rng& rng) {
  const int n = static_cast<int>(p_hat.order());
  if (n % 2 != 0) {
    throw Error(ErrorCode::kInput, "mixed_opt", "need even n");
  }
  Matrix factor = cholesky_psd(p_hat.p);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  Vector v = factor * z;
  // Jitter breaks exact ties so the median split is always balanced.
  std::uniform_real_distribution<double> jitter(0.0, 1e-12);
  for (int i = 0; i < n; ++i) v(i) += jitter(rng);

  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (v(a) != v(b)) return v(a) > v(b);
    return a < b;
  });
  std::vector<int> labels(static_cast<size_t>(n), 2);
  for (int r = 0; r < n / 2; ++r) labels[static_cast<size_t>(idx[static_cast<size_t>(r)])] = 1;
  return Assignment(labels, 2);
}

Algorithm3Result algorithm3_support(const SymMatrix& k, int t, double rho,
                                    const SolveOptions& bb_opts,
                                    const MixedSolveOptions& opts) {
  Algorithm3Result result;
  result.us = top_t_solutions(k, t, bb_opts);
  result.weights = algorithm2_weights(k, result.us, rho, opts);
  return result;
}

}  // namespace balopt
