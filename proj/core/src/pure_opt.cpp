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

#include "balopt/pure_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>

namespace balopt {

double partition_class_count(int n, int m) {
  const int p = n / m;
  double log_count = std::lgamma(n + 1.0) - m * std::lgamma(p + 1.0) -
                     std::lgamma(m + 1.0);
  return std::exp(log_count);
}

void for_each_canonical_assignment(
    int n, int m, const std::function<void(const std::vector<int>&)>& visit) {
  const int p = n / m;
  std::vector<int> labels(static_cast<size_t>(n), 0);

  std::function<void(int)> fill_group;
  std::function<void(int, int, int)> choose;

  fill_group = [&](int g) {
    if (g > m) {
      visit(labels);
      return;
    }
    int anchor = 0;
    while (labels[static_cast<size_t>(anchor)] != 0) ++anchor;
    labels[static_cast<size_t>(anchor)] = g;
    choose(g, anchor + 1, p - 1);
    labels[static_cast<size_t>(anchor)] = 0;
  };

  choose = [&](int g, int start, int need) {
    if (need == 0) {
      fill_group(g + 1);
      return;
    }
    for (int i = start; i <= n - need; ++i) {
      if (labels[static_cast<size_t>(i)] != 0) continue;
      labels[static_cast<size_t>(i)] = g;
      choose(g, i + 1, need - 1);
      labels[static_cast<size_t>(i)] = 0;
    }
  };

  fill_group(1);
}

namespace {

// Squared-metric evaluator for one structure, precomputing whatever the
// metric needs.
std::function<double(const Assignment&)> make_squared_evaluator(
    const StructureSpec& spec, const CovariateMatrix& x, int m) {
  validate_structure(spec);
  if (const auto* rkhs = std::get_if<RkhsSpec>(&spec)) {
    auto k = std::make_shared<SymMatrix>(gram_matrix(rkhs->kernel, x));
    return [k](const Assignment& w) { return mp_rkhs(w, *k); };
  }
  if (const auto* lip = std::get_if<LipschitzSpec>(&spec)) {
    auto d = std::make_shared<SymMatrix>(pairwise_distances(lip->metric, x));
    return [d](const Assignment& w) {
      const double v = mp_lipschitz(w, *d);
      return v * v;
    };
  }
  if (const auto* capped = std::get_if<LipschitzCappedSpec>(&spec)) {
    auto d = std::make_shared<SymMatrix>(pairwise_distances(capped->metric, x));
    const double delta0 = capped->delta0;
    return [d, delta0](const Assignment& w) {
      const double v = mp_lipschitz_capped(w, *d, delta0);
      return v * v;
    };
  }
  if (std::holds_alternative<LInfinitySpec>(spec)) {
    if (m != 2) {
      throw Error(ErrorCode::kUnsupported, "pure_opt",
                  "the exact-matching structure supports two treatments");
    }
    auto xm = std::make_shared<CovariateMatrix>(x);
    return [xm](const Assignment& w) {
      const double v = mp_linf(w, *xm);
      return v * v;
    };
  }
  if (const auto* fq = std::get_if<FiniteDimQSpec>(&spec)) {
    auto phi = std::make_shared<Matrix>(fq->basis.matrix(x));
    const double q = fq->q;
    return [phi, q](const Assignment& w) {
      const double v = mp_finite_q(w, *phi, q);
      return v * v;
    };
  }
  // MahalanobisLinear: quadratic form in X SigmaHat^{-1} X^T, valid for any m.
  Matrix sigma = sample_covariance_ridged(x.mat());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingular, "pure_opt",
                "sample covariance not positive definite after ridge");
  }
  auto k = std::make_shared<SymMatrix>(
      Matrix(x.mat() * llt.solve(x.mat().transpose())));
  return [k](const Assignment& w) { return mp_rkhs(w, *k); };
}

}  // namespace

OptimizerResult exhaustive_pure_opt(const StructureSpec& spec,
                                    const CovariateMatrix& x, int m,
                                    std::uint64_t guard) {
  const int n = static_cast<int>(x.n());
  if (m < 2 || n % m != 0) {
    throw Error(ErrorCode::kInput, "pure_opt",
                "n must be a positive multiple of m");
  }
  if (partition_class_count(n, m) > static_cast<double>(guard)) {
    throw Error(ErrorCode::kInput, "pure_opt",
                "instance too large for exhaustive enumeration");
  }
  auto evaluate = make_squared_evaluator(spec, x, m);

  OptimizerResult result;
  result.solver = "exhaustive";
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  std::vector<std::pair<Assignment, double>> kept;
  for_each_canonical_assignment(n, m, [&](const std::vector<int>& labels) {
    ++count;
    Assignment w(labels, m);
    const double v = evaluate(w);
    if (v < best) {
      best = v;
      // Drop candidates that are no longer within the tie tolerance.
      const double tol = 1e-9 * (1.0 + std::abs(best));
      std::erase_if(kept, [&](const auto& c) { return c.second > best + tol; });
    }
    const double tol = 1e-9 * (1.0 + std::abs(best));
    if (v <= best + tol) kept.emplace_back(std::move(w), v);
  });
  const double tol = 1e-9 * (1.0 + std::abs(best));
  for (auto& [w, v] : kept) {
    if (v <= best + tol) result.optima.push_back(std::move(w));
  }
  result.value = best;
  result.nodes = count;
  return result;
}

namespace {

// Depth-first exact solver for min u^T K u over balanced sign vectors.
// Subjects are processed in norm-descending order, so the free set at any
// depth is a fixed suffix; that makes the balance-aware coordinate
// reachability intervals precomputable.
class PartitionBnB {
 public:
  PartitionBnB(const SymMatrix& k, const SolveOptions& opts, bool allow_ties)
      : opts_(opts), allow_ties_(allow_ties) {
    n_ = static_cast<int>(k.order());
    if (n_ < 2 || n_ % 2 != 0) {
      throw Error(ErrorCode::kInput, "pure_opt",
                  "partition solver needs even n >= 2");
    }
    p_ = n_ / 2;

    // Factor K = L L^T from the spectrum, clamping the numerically negative
    // tail. Truncation threshold keeps the recomputed objective well inside
    // the 1e-9 agreement tolerance.
    Spectrum s = sym_eigen(k);
    const double lmax = std::max(s.lambda_max(), 0.0);
    const double keep = 1e-13 * std::max(lmax, 1e-300);
    std::vector<int> cols;
    for (int i = 0; i < n_; ++i) {
      if (s.eigenvalues(i) > keep) cols.push_back(i);
    }
    rank_ = std::max<int>(1, static_cast<int>(cols.size()));
    lambda_min_ = (static_cast<int>(cols.size()) == n_)
                      ? std::max(s.lambda_min(), 0.0)
                      : 0.0;
    Matrix l(n_, rank_);
    l.setZero();
    for (size_t c = 0; c < cols.size(); ++c) {
      l.col(static_cast<Eigen::Index>(c)) =
          s.eigenvectors.col(cols[c]) * std::sqrt(s.eigenvalues(cols[c]));
    }

    // High-norm subjects first.
    order_.resize(static_cast<size_t>(n_));
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
      return l.row(a).squaredNorm() > l.row(b).squaredNorm();
    });
    items_ = Matrix(rank_, n_);
    for (int j = 0; j < n_; ++j) {
      items_.col(j) = l.row(order_[static_cast<size_t>(j)]).transpose();
    }
    gram_ = items_.transpose() * items_;
    norm2_.resize(static_cast<size_t>(n_));
    for (int j = 0; j < n_; ++j) norm2_[static_cast<size_t>(j)] = gram_(j, j);

    // Per depth and coordinate: suffix values sorted ascending with prefix
    // sums, for the reachable-interval bound under the plus-count budget.
    sorted_.assign(static_cast<size_t>(n_ + 1), {});
    prefix_.assign(static_cast<size_t>(n_ + 1), {});
    suffix_total_ = Matrix::Zero(rank_, n_ + 1);
    for (int d = 0; d <= n_; ++d) {
      sorted_[static_cast<size_t>(d)].assign(static_cast<size_t>(rank_), {});
      prefix_[static_cast<size_t>(d)].assign(static_cast<size_t>(rank_), {});
      for (int c = 0; c < rank_; ++c) {
        auto& vals = sorted_[static_cast<size_t>(d)][static_cast<size_t>(c)];
        vals.reserve(static_cast<size_t>(n_ - d));
        double total = 0.0;
        for (int j = d; j < n_; ++j) {
          vals.push_back(items_(c, j));
          total += items_(c, j);
        }
        suffix_total_(c, d) = total;
        std::sort(vals.begin(), vals.end());
        auto& pre = prefix_[static_cast<size_t>(d)][static_cast<size_t>(c)];
        pre.resize(vals.size() + 1);
        pre[0] = 0.0;
        for (size_t i = 0; i < vals.size(); ++i) pre[i + 1] = pre[i] + vals[i];
      }
    }
    guard_ = 1e-12 * (1.0 + lmax * n_);
  }

  void exclude(const Vector& u_original) {
    Vector v(n_);
    for (int j = 0; j < n_; ++j) v(j) = u_original(order_[static_cast<size_t>(j)]);
    if (v(0) < 0) v = -v;
    excluded_.push_back(std::move(v));
  }

  void seed_incumbent() {
    Vector s = Vector::Zero(rank_);
    Vector u(n_);
    int plus = 0, minus = 0;
    for (int j = 0; j < n_; ++j) {
      const double up = (s + items_.col(j)).squaredNorm();
      const double dn = (s - items_.col(j)).squaredNorm();
      bool take_plus = up <= dn;
      if (plus == p_) take_plus = false;
      if (minus == p_) take_plus = true;
      u(j) = take_plus ? 1.0 : -1.0;
      s += u(j) * items_.col(j);
      (take_plus ? plus : minus)++;
    }
    for (int pass = 0; pass < 4; ++pass) {
      bool improved = false;
      for (int a = 0; a < n_; ++a) {
        for (int b = a + 1; b < n_; ++b) {
          if (u(a) == u(b)) continue;
          Vector swapped =
              s - 2.0 * u(a) * items_.col(a) - 2.0 * u(b) * items_.col(b);
          if (swapped.squaredNorm() + 1e-15 < s.squaredNorm()) {
            u(a) = -u(a);
            u(b) = -u(b);
            s = swapped;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    if (u(0) < 0) u = -u;
    if (!is_excluded_internal(u)) {
      best_value_ = s.squaredNorm();
      best_u_ = u;
      have_solution_ = true;
    }
  }

  // Returns false iff the budget ran out before the search space was
  // exhausted.
  bool run() {
    start_ = std::chrono::steady_clock::now();
    budget_hit_ = false;
    c_.assign(static_cast<size_t>(n_), 0.0);
    u_ = Vector::Zero(n_);
    s_ = Vector::Zero(rank_);
    s2_ = 0.0;
    scratch_.reserve(static_cast<size_t>(n_));
    dive(0, 0, 0);
    return !budget_hit_;
  }

  bool have_solution() const { return have_solution_; }
  double best_value() const { return best_value_; }
  std::uint64_t nodes() const { return nodes_; }

  Vector best_u_original() const {
    Vector u(n_);
    for (int j = 0; j < n_; ++j) u(order_[static_cast<size_t>(j)]) = best_u_(j);
    if (u(0) < 0) u = -u;  // canonical: subject 1 gets treatment 1
    return u;
  }

 private:
  bool is_excluded_internal(const Vector& u) const {
    for (const Vector& e : excluded_) {
      if ((u - e).cwiseAbs().maxCoeff() < 0.5) return true;
    }
    return false;
  }

  bool out_of_budget() {
    if (opts_.node_limit && nodes_ > opts_.node_limit) return true;
    if (opts_.time_limit_seconds > 0 && (nodes_ & 1023) == 0) {
      const auto elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start_)
                               .count();
      if (elapsed > opts_.time_limit_seconds) return true;
    }
    return false;
  }

  // Reachable-interval bound: with need_plus of the suffix items positive,
  // each coordinate's completion lies in a closed interval; distance to it
  // lower-bounds the squared norm. O(rank) per node.
  double interval_bound(int depth, int need_plus) const {
    const int free = n_ - depth;
    double acc = 0.0;
    for (int c = 0; c < rank_; ++c) {
      const auto& pre = prefix_[static_cast<size_t>(depth)][static_cast<size_t>(c)];
      const double total = suffix_total_(c, depth);
      // k smallest as positive gives the interval minimum; k largest the max.
      const double lo = 2.0 * pre[static_cast<size_t>(need_plus)] - total;
      const double hi = 2.0 * (pre[static_cast<size_t>(free)] -
                               pre[static_cast<size_t>(free - need_plus)]) -
                        total;
      const double target = -s_(c);
      double gap = 0.0;
      if (target < lo) {
        gap = lo - target;
      } else if (target > hi) {
        gap = target - hi;
      }
      acc += gap * gap;
    }
    return acc;
  }

  void dive(int depth, int plus, int minus) {
    if (budget_hit_) return;
    ++nodes_;
    if (out_of_budget()) {
      budget_hit_ = true;
      return;
    }
    if (depth == n_) {
      const double value = s_.squaredNorm();
      if (value < best_value_) {
        if (!is_excluded_internal(u_(0) < 0 ? Vector(-u_) : u_)) {
          best_value_ = value;
          best_u_ = u_(0) < 0 ? Vector(-u_) : u_;
          have_solution_ = true;
        }
      }
      return;
    }

    if (have_solution_) {
      const int free = n_ - depth;
      const int need_plus = p_ - plus;
      const double limit =
          allow_ties_ ? best_value_ + guard_ : best_value_ - guard_;
      double bound = interval_bound(depth, need_plus);
      if (bound <= limit) {
        // Balance-aware linear completion of the cross terms.
        double cross_min;
        if (need_plus == 0 || need_plus == free) {
          double total = 0.0;
          for (int j = depth; j < n_; ++j) total += c_[static_cast<size_t>(j)];
          cross_min = need_plus == 0 ? -total : total;
        } else {
          scratch_.clear();
          double total = 0.0;
          for (int j = depth; j < n_; ++j) {
            const double cj = c_[static_cast<size_t>(j)];
            scratch_.push_back(cj);
            total += cj;
          }
          std::nth_element(scratch_.begin(), scratch_.begin() + need_plus - 1,
                           scratch_.end());
          double small = 0.0;
          for (int i = 0; i < need_plus; ++i) small += scratch_[static_cast<size_t>(i)];
          cross_min = 2.0 * small - total;
        }
        bound = std::max(bound, s2_ + 2.0 * cross_min + lambda_min_ * free);
      }
      if (allow_ties_ ? (bound - guard_ > best_value_)
                      : (bound - guard_ >= best_value_)) {
        return;
      }
    }

    const bool can_plus = plus < p_;
    const bool can_minus = minus < p_ && depth > 0;  // u_1 fixed to +1
    const double cd = c_[static_cast<size_t>(depth)];
    const int first = (cd <= 0 || !can_minus) ? +1 : -1;
    for (int pass = 0; pass < 2; ++pass) {
      const int sign = pass == 0 ? first : -first;
      if (sign > 0 && !can_plus) continue;
      if (sign < 0 && !can_minus) continue;
      u_(depth) = sign;
      s2_ += 2.0 * sign * c_[static_cast<size_t>(depth)] + norm2_[static_cast<size_t>(depth)];
      s_ += sign * items_.col(depth);
      for (int j = depth + 1; j < n_; ++j) {
        c_[static_cast<size_t>(j)] += sign * gram_(depth, j);
      }
      dive(depth + 1, plus + (sign > 0), minus + (sign < 0));
      for (int j = depth + 1; j < n_; ++j) {
        c_[static_cast<size_t>(j)] -= sign * gram_(depth, j);
      }
      s_ -= sign * items_.col(depth);
      s2_ -= 2.0 * sign * c_[static_cast<size_t>(depth)] + norm2_[static_cast<size_t>(depth)];
      u_(depth) = 0.0;
      if (budget_hit_) return;
    }
  }

  SolveOptions opts_;
  bool allow_ties_;
  int n_ = 0, p_ = 0, rank_ = 0;
  Matrix items_;  // rank x n, column j = processed item j
  Matrix gram_;
  std::vector<double> norm2_;
  std::vector<int> order_;
  double lambda_min_ = 0.0;
  double guard_ = 0.0;
  std::vector<Vector> excluded_;
  std::vector<std::vector<std::vector<double>>> sorted_, prefix_;
  Matrix suffix_total_;

  std::vector<double> c_, scratch_;
  Vector u_, s_;
  double s2_ = 0.0;

  double best_value_ = std::numeric_limits<double>::infinity();
  Vector best_u_;
  bool have_solution_ = false;
  bool budget_hit_ = false;
  std::uint64_t nodes_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

OptimizerResult bb_partition_quadratic(const SymMatrix& k,
                                       const SolveOptions& opts) {
  PartitionBnB solver(k, opts, /*allow_ties=*/false);
  solver.seed_incumbent();
  const bool complete = solver.run();
  if (!solver.have_solution()) {
    throw Error(ErrorCode::kBudget, "pure_opt",
                "budget exhausted before any feasible solution");
  }
  Vector u = solver.best_u_original();
  OptimizerResult result;
  result.solver = "branch_and_bound";
  result.optima.push_back(Assignment::from_signed(u));
  result.value = u.dot(k.mat() * u);  // recompute on the exact input
  result.nodes = solver.nodes();
  result.proven_optimal = complete;
  return result;
}

std::vector<Vector> top_t_solutions(const SymMatrix& k, int t,
                                    const SolveOptions& opts) {
  if (t < 1) {
    throw Error(ErrorCode::kInput, "pure_opt", "T must be at least 1");
  }
  const int n = static_cast<int>(k.order());
  std::vector<Vector> us;
  const double total = partition_class_count(n, 2);
  for (int round = 0; round < t; ++round) {
    if (static_cast<double>(us.size()) >= total) break;  // space exhausted
    PartitionBnB solver(k, opts, /*allow_ties=*/true);
    for (const Vector& u : us) solver.exclude(u);
    const bool complete = solver.run();
    if (!solver.have_solution()) {
      if (!complete) {
        throw Error(ErrorCode::kBudget, "pure_opt",
                    "budget exhausted while enumerating top solutions");
      }
      break;
    }
    if (!complete) {
      throw Error(ErrorCode::kBudget, "pure_opt",
                  "budget exhausted while enumerating top solutions");
    }
    us.push_back(solver.best_u_original());
  }
  return us;
}

Assignment blocking_assign(const CovariateMatrix& x, Rng& rng) {
  const int n = static_cast<int>(x.n());
  if (n % 2 != 0) {
    throw Error(ErrorCode::kInput, "pure_opt", "blocking needs even n");
  }
  std::map<std::vector<double>, std::vector<int>> classes;
  for (int i = 0; i < n; ++i) {
    std::vector<double> key(static_cast<size_t>(x.d()));
    for (Eigen::Index j = 0; j < x.d(); ++j) key[static_cast<size_t>(j)] = x.mat()(i, j);
    classes[key].push_back(i);
  }
  std::vector<int> labels(static_cast<size_t>(n), 0);
  std::vector<int> leftovers;
  for (auto& [key, members] : classes) {
    std::shuffle(members.begin(), members.end(), rng);
    size_t i = 0;
    for (; i + 1 < members.size(); i += 2) {
      const bool flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
      labels[static_cast<size_t>(members[i])] = flip ? 2 : 1;
      labels[static_cast<size_t>(members[i + 1])] = flip ? 1 : 2;
    }
    if (i < members.size()) leftovers.push_back(members[i]);
  }
  std::shuffle(leftovers.begin(), leftovers.end(), rng);
  for (size_t i = 0; i < leftovers.size(); ++i) {
    labels[static_cast<size_t>(leftovers[i])] = i < leftovers.size() / 2 ? 1 : 2;
  }
  return Assignment(labels, 2);
}

OptimizerResult finite_q_pure_opt(const Matrix& phi, double q, int m,
                                  std::uint64_t guard) {
  const int n = static_cast<int>(phi.rows());
  if (m < 2 || n % m != 0) {
    throw Error(ErrorCode::kInput, "pure_opt",
                "n must be a positive multiple of m");
  }
  if (q == 2.0 && m == 2) {
    SymMatrix k{Matrix(phi * phi.transpose())};
    OptimizerResult result = bb_partition_quadratic(k);
    result.value *= 4.0 / (double(n) * double(n));  // M_p^2 scaling
    return result;
  }
  if (!(q == 1.0 || q == 2.0 || std::isinf(q))) {
    throw Error(ErrorCode::kInput, "pure_opt", "q must be 1, 2, or infinity");
  }
  if (partition_class_count(n, m) > static_cast<double>(guard)) {
    throw Error(ErrorCode::kInput, "pure_opt",
                "instance too large for exhaustive enumeration");
  }
  OptimizerResult result;
  result.solver = "exhaustive";
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  std::vector<std::pair<Assignment, double>> kept;
  for_each_canonical_assignment(n, m, [&](const std::vector<int>& labels) {
    ++count;
    Assignment w(labels, m);
    const double v0 = mp_finite_q(w, phi, q);
    const double v = v0 * v0;
    if (v < best) {
      best = v;
      const double tol = 1e-9 * (1.0 + std::abs(best));
      std::erase_if(kept, [&](const auto& c) { return c.second > best + tol; });
    }
    const double tol = 1e-9 * (1.0 + std::abs(best));
    if (v <= best + tol) kept.emplace_back(std::move(w), v);
  });
  const double tol = 1e-9 * (1.0 + std::abs(best));
  for (auto& [w, v] : kept) {
    if (v <= best + tol) result.optima.push_back(std::move(w));
  }
  result.value = best;
  result.nodes = count;
  return result;
}

}  // namespace balopt
