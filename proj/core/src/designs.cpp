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

#include "balopt/designs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace balopt {

namespace {

constexpr std::uint64_t kMaterializeLimit = 20000;
constexpr int kRejectionCap = 1000000;

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

std::vector<std::vector<int>> label_permutations(int m) {
  std::vector<int> perm(static_cast<size_t>(m));
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<std::vector<int>> all;
  do {
    all.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return all;
}

Assignment apply_permutation(const Assignment& w, const std::vector<int>& perm) {
  std::vector<int> labels(static_cast<size_t>(w.n()));
  for (int i = 0; i < w.n(); ++i) {
    labels[static_cast<size_t>(i)] = perm[static_cast<size_t>(w.label(i) - 1)];
  }
  return Assignment(std::move(labels), w.m());
}

// All balanced labeled assignments when there are at most `limit` of them;
// empty vector otherwise.
std::vector<Assignment> enumerate_labeled(int n, int m, std::uint64_t limit) {
  const double total = partition_class_count(n, m) * factorial(m);
  if (total > static_cast<double>(limit)) return {};
  std::vector<Assignment> all;
  const auto perms = label_permutations(m);
  for_each_canonical_assignment(n, m, [&](const std::vector<int>& labels) {
    Assignment w(labels, m);
    for (const auto& perm : perms) all.push_back(apply_permutation(w, perm));
  });
  return all;
}

DesignSupport uniform_support(std::vector<Assignment> ws) {
  DesignSupport support;
  const double w = 1.0 / static_cast<double>(ws.size());
  support.reserve(ws.size());
  for (auto& a : ws) support.emplace_back(std::move(a), w);
  return support;
}

Assignment complete_randomization_draw(int n, int m, Rng& rng) {
  std::vector<int> labels(static_cast<size_t>(n));
  const int p = n / m;
  int pos = 0;
  for (int k = 1; k <= m; ++k) {
    for (int c = 0; c < p; ++c) labels[static_cast<size_t>(pos++)] = k;
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return Assignment(std::move(labels), m);
}

PMatrix cr_analytic_p(int n, int m) {
  const int p = n / m;
  const double off = double(p - 1) / double(n - 1) -
                     double(n - p) / (double(m - 1) * double(n - 1));
  Matrix mat = Matrix::Constant(n, n, off);
  mat.diagonal().setOnes();
  return PMatrix{SymMatrix(mat)};
}

std::map<std::vector<double>, int> row_class_sizes(const CovariateMatrix& x) {
  std::map<std::vector<double>, int> sizes;
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    std::vector<double> key(static_cast<size_t>(x.d()));
    for (Eigen::Index j = 0; j < x.d(); ++j) key[static_cast<size_t>(j)] = x.mat()(i, j);
    ++sizes[key];
  }
  return sizes;
}

// Blocking support criterion: within every covariate class the group-1 count
// must be floor(c/2) or ceil(c/2).
bool attains_max_exact_matching(const Assignment& w, const CovariateMatrix& x) {
  std::map<std::vector<double>, std::pair<int, int>> counts;
  for (int i = 0; i < w.n(); ++i) {
    std::vector<double> key(static_cast<size_t>(x.d()));
    for (Eigen::Index j = 0; j < x.d(); ++j) key[static_cast<size_t>(j)] = x.mat()(i, j);
    auto& c = counts[key];
    ++(w.label(i) == 1 ? c.first : c.second);
  }
  for (const auto& [key, c] : counts) {
    const int size = c.first + c.second;
    if (c.first < size / 2 || c.first > (size + 1) / 2) return false;
  }
  return true;
}

bool is_quadratic_structure(const StructureSpec& s) {
  if (std::holds_alternative<RkhsSpec>(s)) return true;
  if (std::holds_alternative<MahalanobisLinearSpec>(s)) return true;
  if (const auto* fq = std::get_if<FiniteDimQSpec>(&s)) return fq->q == 2.0;
  return false;
}

SymMatrix quadratic_kernel_for(const StructureSpec& s,
                               const CovariateMatrix& x) {
  if (const auto* rkhs = std::get_if<RkhsSpec>(&s)) {
    return gram_matrix(rkhs->kernel, x);
  }
  if (const auto* fq = std::get_if<FiniteDimQSpec>(&s)) {
    Matrix phi = fq->basis.matrix(x);
    return SymMatrix(Matrix(phi * phi.transpose()));
  }
  Matrix sigma = sample_covariance_ridged(x.mat());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingular, "designs",
                "sample covariance not positive definite after ridge");
  }
  return SymMatrix(Matrix(x.mat() * llt.solve(x.mat().transpose())));
}

}  // namespace

std::string design_name(const DesignSpec& spec) {
  std::ostringstream os;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CompleteRandomizationSpec>) {
          os << "complete_randomization";
        } else if constexpr (std::is_same_v<T, BlockingSpec>) {
          os << "blocking";
        } else if constexpr (std::is_same_v<T, PairwiseMatchingSpec>) {
          os << "pairwise_matching(" << v.metric.name() << ")";
        } else if constexpr (std::is_same_v<T, RerandomizationSpec>) {
          os << "rerandomization(p=" << v.acceptance_prob << ")";
        } else if constexpr (std::is_same_v<T, PureOptimalSpec>) {
          os << "pure_optimal(" << structure_id(v.structure) << ")";
        } else {
          os << "mixed_optimal(" << v.kernel.name() << ",T=" << v.t
             << ",rho=" << v.rho << ")";
        }
      },
      spec.variant);
  return os.str();
}

DesignDistribution DesignDistribution::from_support(DesignSupport support,
                                                    int m, DesignMeta meta) {
  if (support.empty()) {
    throw Error(ErrorCode::kInput, "designs", "design support is empty");
  }
  DesignDistribution d;
  d.n_ = support.front().first.n();
  d.m_ = m;
  double total = 0.0;
  for (const auto& [w, weight] : support) {
    if (w.n() != d.n_ || w.m() != m) {
      throw Error(ErrorCode::kInput, "designs",
                  "design support mixes assignment shapes");
    }
    if (weight < 0) {
      throw Error(ErrorCode::kInput, "designs",
                  "design weights must be nonnegative");
    }
    total += weight;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw Error(ErrorCode::kInput, "designs",
                "design weights must sum to one");
  }
  d.support_ = std::move(support);
  d.cumulative_.reserve(d.support_.size());
  double acc = 0.0;
  for (const auto& [w, weight] : d.support_) {
    acc += weight;
    d.cumulative_.push_back(acc);
  }
  d.cumulative_.back() = 1.0;
  d.meta_ = std::move(meta);
  return d;
}

DesignDistribution DesignDistribution::from_sampler(
    std::function<Assignment(Rng&)> fn, int n, int m, DesignMeta meta) {
  DesignDistribution d;
  d.sampler_ = std::move(fn);
  d.n_ = n;
  d.m_ = m;
  d.meta_ = std::move(meta);
  d.cap_hit_ = std::make_shared<std::atomic<bool>>(false);
  return d;
}

const DesignSupport& DesignDistribution::support() const {
  if (support_.empty()) {
    throw Error(ErrorCode::kUnsupported, "designs",
                "design has no explicit support");
  }
  return support_;
}

Assignment DesignDistribution::sample(Rng& rng) const {
  std::optional<Assignment> draw;
  if (!support_.empty()) {
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it =
        std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    const size_t idx = std::min(
        static_cast<size_t>(it - cumulative_.begin()), support_.size() - 1);
    draw = support_[idx].first;
  } else {
    draw = sampler_(rng);
  }
  // Blind the identity of treatments.
  std::vector<int> perm(static_cast<size_t>(m_));
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  return apply_permutation(*draw, perm);
}

PMatrix DesignDistribution::p_matrix() const {
  if (analytic_p_) return *analytic_p_;
  if (!support_.empty()) return p_matrix_of_support(support_, m_);
  throw Error(ErrorCode::kUnsupported, "designs",
              "no exact P matrix for a generative design; use "
              "estimate_p_matrix");
}

bool DesignDistribution::sampler_cap_hit() const {
  return cap_hit_ && cap_hit_->load();
}

DesignDistribution point_mass_design(const Assignment& w) {
  std::vector<Assignment> all;
  for (const auto& perm : label_permutations(w.m())) {
    all.push_back(apply_permutation(w, perm));
  }
  return DesignDistribution::from_support(uniform_support(std::move(all)),
                                          w.m(), DesignMeta{"point_mass"});
}

double rerandomization_threshold(const CovariateMatrix& x,
                                 double acceptance_prob, int n_mc, Rng& rng) {
  if (!(acceptance_prob > 0.0) || acceptance_prob > 1.0) {
    throw Error(ErrorCode::kInput, "designs",
                "acceptance probability must be in (0, 1]");
  }
  if (acceptance_prob == 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  if (n_mc < 100) {
    throw Error(ErrorCode::kInput, "designs",
                "need at least 100 Monte Carlo draws for the threshold");
  }
  const int n = static_cast<int>(x.n());
  std::vector<double> values(static_cast<size_t>(n_mc));
  for (int i = 0; i < n_mc; ++i) {
    Assignment w = complete_randomization_draw(n, 2, rng);
    values[static_cast<size_t>(i)] = mahalanobis_imbalance(w, x);
  }
  std::sort(values.begin(), values.end());
  int k = static_cast<int>(std::ceil(acceptance_prob * n_mc));
  k = std::clamp(k, 1, n_mc);
  return values[static_cast<size_t>(k - 1)];
}

namespace {

DesignDistribution build_complete_randomization(int n, int m) {
  DesignMeta meta{"complete_randomization"};
  auto labeled = enumerate_labeled(n, m, kMaterializeLimit);
  DesignDistribution d =
      labeled.empty()
          ? DesignDistribution::from_sampler(
                [n, m](Rng& rng) {
                  return complete_randomization_draw(n, m, rng);
                },
                n, m, meta)
          : DesignDistribution::from_support(uniform_support(std::move(labeled)),
                                             m, meta);
  d.set_analytic_p(cr_analytic_p(n, m));
  return d;
}

DesignDistribution build_blocking(const CovariateMatrix& x, int m) {
  if (m != 2) {
    throw Error(ErrorCode::kUnsupported, "designs",
                "blocking is implemented for two treatments");
  }
  const int n = static_cast<int>(x.n());
  DesignMeta meta{"blocking"};
  auto labeled = enumerate_labeled(n, m, kMaterializeLimit);
  if (!labeled.empty()) {
    std::vector<Assignment> kept;
    for (auto& w : labeled) {
      if (attains_max_exact_matching(w, x)) kept.push_back(std::move(w));
    }
    return DesignDistribution::from_support(uniform_support(std::move(kept)),
                                            m, meta);
  }
  CovariateMatrix xc = x;
  return DesignDistribution::from_sampler(
      [xc](Rng& rng) { return blocking_assign(xc, rng); }, n, m, meta);
}

DesignDistribution build_matched_pairs(
    int n, const std::vector<std::pair<int, int>>& pairs,
    const std::vector<int>& unmatched, DesignMeta meta) {
  const size_t bits = pairs.size();
  const bool enumerable =
      unmatched.empty() && bits < 60 &&
      (std::uint64_t(1) << bits) <= kMaterializeLimit;
  if (!enumerable) {
    // Sampler: split each pair independently, completely randomize leftovers.
    auto pairs_copy = pairs;
    auto left_copy = unmatched;
    return DesignDistribution::from_sampler(
        [n, pairs_copy, left_copy](Rng& rng) {
          std::vector<int> labels(static_cast<size_t>(n), 0);
          for (const auto& [a, b] : pairs_copy) {
            const bool flip = std::uniform_int_distribution<int>(0, 1)(rng);
            labels[static_cast<size_t>(a)] = flip ? 2 : 1;
            labels[static_cast<size_t>(b)] = flip ? 1 : 2;
          }
          std::vector<int> left = left_copy;
          std::shuffle(left.begin(), left.end(), rng);
          for (size_t i = 0; i < left.size(); ++i) {
            labels[static_cast<size_t>(left[i])] = i < left.size() / 2 ? 1 : 2;
          }
          return Assignment(std::move(labels), 2);
        },
        n, 2, std::move(meta));
  }
  std::vector<Assignment> all;
  all.reserve(static_cast<size_t>(1) << bits);
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << bits); ++mask) {
    std::vector<int> labels(static_cast<size_t>(n), 0);
    for (size_t j = 0; j < bits; ++j) {
      const auto& [a, b] = pairs[j];
      const bool flip = (mask >> j) & 1;
      labels[static_cast<size_t>(a)] = flip ? 2 : 1;
      labels[static_cast<size_t>(b)] = flip ? 1 : 2;
    }
    all.emplace_back(std::move(labels), 2);
  }
  return DesignDistribution::from_support(uniform_support(std::move(all)), 2,
                                          std::move(meta));
}

DesignDistribution build_pairwise_matching(const CovariateMatrix& x,
                                           const PairwiseMatchingSpec& spec,
                                           int m) {
  if (m != 2) {
    throw Error(ErrorCode::kUnsupported, "designs",
                "pairwise matching is implemented for two treatments");
  }
  SymMatrix d = pairwise_distances(spec.metric, x);
  Matching match = blossom_matching(d);
  DesignMeta meta{"pairwise_matching(" + spec.metric.name() + ")"};
  return build_matched_pairs(static_cast<int>(x.n()), match.pairs, {}, meta);
}

DesignDistribution build_rerandomization(const CovariateMatrix& x,
                                         const RerandomizationSpec& spec,
                                         int m, Rng& build_rng) {
  if (m != 2) {
    throw Error(ErrorCode::kUnsupported, "designs",
                "re-randomization is implemented for two treatments");
  }
  const int n = static_cast<int>(x.n());
  const double threshold = rerandomization_threshold(
      x, spec.acceptance_prob, spec.mc_draws, build_rng);
  DesignMeta meta{"rerandomization"};
  meta.rerand_threshold = threshold;

  auto labeled = enumerate_labeled(n, m, kMaterializeLimit);
  if (!labeled.empty()) {
    std::vector<Assignment> kept;
    for (auto& w : labeled) {
      if (mahalanobis_imbalance(w, x) <= threshold * (1.0 + 1e-12) ||
          std::isinf(threshold)) {
        kept.push_back(std::move(w));
      }
    }
    if (!kept.empty()) {
      return DesignDistribution::from_support(uniform_support(std::move(kept)),
                                              m, meta);
    }
  }
  CovariateMatrix xc = x;
  auto cap_hit = std::make_shared<std::atomic<bool>>(false);
  auto d = DesignDistribution::from_sampler(
      [xc, threshold, n, cap_hit](Rng& rng) {
        std::optional<Assignment> best;
        double best_value = std::numeric_limits<double>::infinity();
        for (int tries = 0; tries < kRejectionCap; ++tries) {
          Assignment w = complete_randomization_draw(n, 2, rng);
          const double v = mahalanobis_imbalance(w, xc);
          if (v <= threshold || std::isinf(threshold)) return w;
          if (v < best_value) {
            best_value = v;
            best = std::move(w);
          }
        }
        cap_hit->store(true);
        return *best;
      },
      n, m, meta);
  return d;
}

DesignDistribution build_pure_optimal(const CovariateMatrix& x,
                                      const PureOptimalSpec& spec, int m) {
  validate_structure(spec.structure);
  const int n = static_cast<int>(x.n());
  DesignMeta meta{"pure_optimal(" + structure_id(spec.structure) + ")"};

  // The exact-matching structure is served by blocking and the Lipschitz
  // structures by (penalty) matching whenever enumeration is out of reach.
  const double classes = partition_class_count(n, m);
  if (classes <= static_cast<double>(spec.exhaustive_limit)) {
    OptimizerResult result =
        exhaustive_pure_opt(spec.structure, x, m, spec.exhaustive_limit);
    std::vector<Assignment> all;
    for (const Assignment& w : result.optima) {
      for (const auto& perm : label_permutations(m)) {
        all.push_back(apply_permutation(w, perm));
      }
    }
    return DesignDistribution::from_support(uniform_support(std::move(all)), m,
                                            meta);
  }

  if (std::holds_alternative<LInfinitySpec>(spec.structure)) {
    DesignDistribution d = build_blocking(x, m);
    meta.notes = "blocking-equivalent";
    return d;
  }
  if (const auto* lip = std::get_if<LipschitzSpec>(&spec.structure)) {
    if (m != 2) {
      throw Error(ErrorCode::kInput, "designs",
                  "instance too large for exhaustive multi-treatment "
                  "optimization");
    }
    SymMatrix d = pairwise_distances(lip->metric, x);
    Matching match = blossom_matching(d);
    meta.notes = "matching-equivalent";
    return build_matched_pairs(n, match.pairs, {}, meta);
  }
  if (const auto* capped = std::get_if<LipschitzCappedSpec>(&spec.structure)) {
    if (m != 2) {
      throw Error(ErrorCode::kInput, "designs",
                  "instance too large for exhaustive multi-treatment "
                  "optimization");
    }
    SymMatrix d = pairwise_distances(capped->metric, x);
    Matching match = penalty_matching(d, capped->delta0);
    meta.notes = "penalty-matching-equivalent";
    return build_matched_pairs(n, match.pairs, match.unmatched, meta);
  }
  if (m == 2 && is_quadratic_structure(spec.structure)) {
    SymMatrix k = quadratic_kernel_for(spec.structure, x);
    OptimizerResult result = bb_partition_quadratic(k, spec.solve);
    if (!result.proven_optimal) {
      meta.notes = "branch-and-bound budget hit; best found";
    } else {
      meta.notes = "branch-and-bound single optimum";
    }
    DesignDistribution d = point_mass_design(result.optima.front());
    return DesignDistribution::from_support(d.support(), m, meta);
  }
  throw Error(ErrorCode::kInput, "designs",
              "instance too large for this structure's exact solver");
}

DesignDistribution build_mixed_optimal(const CovariateMatrix& x,
                                       const MixedOptimalSpec& spec, int m) {
  if (m != 2) {
    throw Error(ErrorCode::kUnsupported, "designs",
                "mixed-strategy designs are implemented for two treatments");
  }
  SymMatrix k = gram_matrix(spec.kernel, x);
  DesignDistribution d =
      algorithm3_design(k, spec.t, spec.rho, spec.solve, spec.mixed);
  return d;
}

}  // namespace

DesignDistribution build_design(const DesignSpec& spec,
                                const CovariateMatrix& x) {
  const int n = static_cast<int>(x.n());
  if (spec.m < 2 || n % spec.m != 0) {
    throw Error(ErrorCode::kInput, "designs",
                "n must be divisible by the number of treatments");
  }
  Rng build_rng = make_rng(spec.seed, 0xb17d);
  return std::visit(
      [&](const auto& v) -> DesignDistribution {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CompleteRandomizationSpec>) {
          return build_complete_randomization(n, spec.m);
        } else if constexpr (std::is_same_v<T, BlockingSpec>) {
          return build_blocking(x, spec.m);
        } else if constexpr (std::is_same_v<T, PairwiseMatchingSpec>) {
          return build_pairwise_matching(x, v, spec.m);
        } else if constexpr (std::is_same_v<T, RerandomizationSpec>) {
          return build_rerandomization(x, v, spec.m, build_rng);
        } else if constexpr (std::is_same_v<T, PureOptimalSpec>) {
          return build_pure_optimal(x, v, spec.m);
        } else {
          return build_mixed_optimal(x, v, spec.m);
        }
      },
      spec.variant);
}

Assignment sample_assignment(const DesignDistribution& design, Rng& rng) {
  return design.sample(rng);
}

PMatrix p_matrix_of_design(const DesignDistribution& design) {
  return design.p_matrix();
}

PMatrix estimate_p_matrix(const DesignDistribution& design, int reps,
                          Rng& rng) {
  if (reps < 1) {
    throw Error(ErrorCode::kInput, "designs", "need at least one draw");
  }
  const int n = design.n();
  const double anti = 1.0 / double(design.m() - 1);
  Matrix acc = Matrix::Zero(n, n);
  for (int r = 0; r < reps; ++r) {
    Assignment w = design.sample(rng);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = (w.label(i) == w.label(j)) ? 1.0 : -anti;
        acc(i, j) += v;
        if (j != i) acc(j, i) += v;
      }
    }
  }
  acc /= double(reps);
  return PMatrix{SymMatrix(acc)};
}

double worst_case_ratio(const DesignDistribution& design) {
  if (design.m() != 2) {
    throw Error(ErrorCode::kUnsupported, "designs",
                "worst-case ratio is defined for two treatments");
  }
  return worst_case_ratio(design.p_matrix());
}

DesignDistribution algorithm3_design(const SymMatrix& k, int t, double rho,
                                     const SolveOptions& bb_opts,
                                     const MixedSolveOptions& opts) {
  Algorithm3Result alg = algorithm3_support(k, t, rho, bb_opts, opts);
  DesignSupport support;
  double total = 0.0;
  for (size_t i = 0; i < alg.us.size(); ++i) {
    const double theta = alg.weights.weights.theta(static_cast<Eigen::Index>(i));
    if (theta > 1e-12) total += theta;
  }
  for (size_t i = 0; i < alg.us.size(); ++i) {
    const double theta = alg.weights.weights.theta(static_cast<Eigen::Index>(i));
    if (theta <= 1e-12) continue;
    const double w = theta / total / 2.0;
    support.emplace_back(Assignment::from_signed(alg.us[i]), w);
    support.emplace_back(Assignment::from_signed(Vector(-alg.us[i])), w);
  }
  DesignMeta meta{"mixed_optimal"};
  std::ostringstream os;
  os << "algorithm3: T=" << alg.us.size() << " objective=" << alg.weights.objective
     << (alg.weights.feasible ? "" : " (infeasible)")
     << (alg.weights.converged ? "" : " (budget)");
  meta.notes = os.str();
  return DesignDistribution::from_support(std::move(support), 2, meta);
}

DesignDistribution algorithm1_design(const SymMatrix& k, double rho,
                                     const MixedSolveOptions& opts) {
  Algorithm1Result alg = algorithm1_pmatrix(k, rho, opts);
  const int n = static_cast<int>(k.order());
  DesignMeta meta{"mixed_optimal_relaxation"};
  auto p_hat = std::make_shared<PMatrix>(alg.p_hat);
  return DesignDistribution::from_sampler(
      [p_hat](Rng& rng) { return sample_sign_gaussian(*p_hat, rng); }, n, 2,
      meta);
}

}  // namespace balopt
