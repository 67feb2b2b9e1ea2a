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

#include "balopt/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>

namespace balopt {

double hungarian_min_cost(const Matrix& cost, std::vector<int>* row_to_col,
                          Vector* row_duals, Vector* col_duals) {
  if (cost.rows() != cost.cols()) {
    throw Error(ErrorCode::kInput, "matching",
                "assignment cost matrix must be square");
  }
  const int n = static_cast<int>(cost.rows());
  if (n == 0) {
    if (row_to_col) row_to_col->clear();
    return 0.0;
  }
  const double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  if (row_to_col) row_to_col->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    total += cost(p[j] - 1, j - 1);
    if (row_to_col) (*row_to_col)[p[j] - 1] = j - 1;
  }
  if (row_duals) {
    *row_duals = Vector(n);
    for (int i = 1; i <= n; ++i) (*row_duals)(i - 1) = u[i];
  }
  if (col_duals) {
    *col_duals = Vector(n);
    for (int j = 1; j <= n; ++j) (*col_duals)(j - 1) = v[j];
  }
  return total;
}

namespace {

// Maximum-weight matching on a dense general graph, the classical O(V^3)
// primal-dual blossom scheme with integer weights. Vertices are 1-based;
// slots n+1..2n hold contracted blossoms.
class BlossomSolver {
 public:
  explicit BlossomSolver(const std::vector<std::vector<long long>>& w)
      : n_(static_cast<int>(w.size())) {
    const int m = 2 * n_ + 1;
    g_.assign(m, std::vector<Edge>(m));
    lab_.assign(m, 0);
    match_.assign(m, 0);
    slack_.assign(m, 0);
    st_.assign(m, 0);
    pa_.assign(m, 0);
    state_.assign(m, -1);
    vis_.assign(m, 0);
    flower_.assign(m, {});
    flower_from_.assign(m, std::vector<int>(n_ + 1, 0));
    for (int u = 1; u <= n_; ++u) {
      for (int v = 1; v <= n_; ++v) {
        g_[u][v] = Edge{u, v, (u == v) ? 0 : w[u - 1][v - 1]};
      }
    }
  }

  // Runs the solver; match(i) is the 0-based partner of vertex i or -1.
  long long solve() {
    n_x_ = n_;
    long long w_max = 0;
    for (int u = 1; u <= n_; ++u) {
      st_[u] = u;
      for (int v = 1; v <= n_; ++v) {
        flower_from_[u][v] = (u == v) ? u : 0;
        w_max = std::max(w_max, g_[u][v].w);
      }
    }
    for (int u = 1; u <= n_; ++u) lab_[u] = w_max;
    while (grow()) {
    }
    long long total = 0;
    for (int u = 1; u <= n_; ++u) {
      if (match_[u] && match_[u] < u) total += g_[u][match_[u]].w;
    }
    return total;
  }

  int match(int u0) const {  // 0-based accessor
    const int m = match_[u0 + 1];
    return m == 0 ? -1 : m - 1;
  }

 private:
  struct Edge {
    int u = 0, v = 0;
    long long w = 0;
  };
  static constexpr long long kInf = std::numeric_limits<long long>::max() / 4;

  long long e_delta(const Edge& e) const {
    return lab_[e.u] + lab_[e.v] - g_[e.u][e.v].w * 2;
  }

  void update_slack(int u, int x) {
    if (!slack_[x] || e_delta(g_[u][x]) < e_delta(g_[slack_[x]][x])) {
      slack_[x] = u;
    }
  }

  void set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u) {
      if (g_[u][x].w > 0 && st_[u] != x && state_[st_[u]] == 0) {
        update_slack(u, x);
      }
    }
  }

  void q_push(int x) {
    if (x <= n_) {
      q_.push_back(x);
    } else {
      for (int i : flower_[x]) q_push(i);
    }
  }

  void set_st(int x, int b) {
    st_[x] = b;
    if (x > n_) {
      for (int i : flower_[x]) set_st(i, b);
    }
  }

  int get_pr(int b, int xr) {
    int pr = static_cast<int>(
        std::find(flower_[b].begin(), flower_[b].end(), xr) -
        flower_[b].begin());
    if (pr % 2 == 1) {
      std::reverse(flower_[b].begin() + 1, flower_[b].end());
      return static_cast<int>(flower_[b].size()) - pr;
    }
    return pr;
  }

  void set_match(int u, int v) {
    match_[u] = g_[u][v].v;
    if (u > n_) {
      const Edge e = g_[u][v];
      const int xr = flower_from_[u][e.u];
      const int pr = get_pr(u, xr);
      for (int i = 0; i < pr; ++i) {
        set_match(flower_[u][i], flower_[u][i ^ 1]);
      }
      set_match(xr, v);
      std::rotate(flower_[u].begin(), flower_[u].begin() + pr,
                  flower_[u].end());
    }
  }

  void augment(int u, int v) {
    for (;;) {
      const int xnv = st_[match_[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st_[pa_[xnv]]);
      u = st_[pa_[xnv]];
      v = xnv;
    }
  }

  int get_lca(int u, int v) {
    ++t_lca_;
    for (; u || v; std::swap(u, v)) {
      if (u == 0) continue;
      if (vis_[u] == t_lca_) return u;
      vis_[u] = t_lca_;
      u = st_[match_[u]];
      if (u) u = st_[pa_[u]];
    }
    return 0;
  }

  void add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    state_[b] = 0;
    match_[b] = match_[lca];
    flower_[b].clear();
    flower_[b].push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    std::reverse(flower_[b].begin() + 1, flower_[b].end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) {
      g_[b][x].w = 0;
      g_[x][b].w = 0;
    }
    for (int x = 1; x <= n_; ++x) flower_from_[b][x] = 0;
    for (int xs : flower_[b]) {
      for (int x = 1; x <= n_x_; ++x) {
        if (g_[b][x].w == 0 || e_delta(g_[xs][x]) < e_delta(g_[b][x])) {
          g_[b][x] = g_[xs][x];
          g_[x][b] = g_[x][xs];
        }
      }
      for (int x = 1; x <= n_; ++x) {
        if (flower_from_[xs][x]) flower_from_[b][x] = xs;
      }
    }
    set_slack(b);
  }

  void expand_blossom(int b) {
    for (int i : flower_[b]) set_st(i, i);
    const int xr = flower_from_[b][g_[b][pa_[b]].u];
    const int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
      const int xs = flower_[b][i];
      const int xns = flower_[b][i + 1];
      pa_[xs] = g_[xns][xs].u;
      state_[xs] = 1;
      state_[xns] = 0;
      slack_[xs] = 0;
      set_slack(xns);
      q_push(xns);
    }
    state_[xr] = 1;
    pa_[xr] = pa_[b];
    for (size_t i = pr + 1; i < flower_[b].size(); ++i) {
      const int xs = flower_[b][i];
      state_[xs] = -1;
      set_slack(xs);
    }
    st_[b] = 0;
  }

  bool on_found_edge(const Edge& e) {
    const int u = st_[e.u];
    const int v = st_[e.v];
    if (state_[v] == -1) {
      pa_[v] = e.u;
      state_[v] = 1;
      const int nu = st_[match_[v]];
      slack_[v] = 0;
      slack_[nu] = 0;
      state_[nu] = 0;
      q_push(nu);
    } else if (state_[v] == 0) {
      const int lca = get_lca(u, v);
      if (!lca) {
        augment(u, v);
        augment(v, u);
        return true;
      }
      add_blossom(u, lca, v);
    }
    return false;
  }

  bool grow() {
    std::fill(state_.begin() + 1, state_.begin() + n_x_ + 1, -1);
    std::fill(slack_.begin() + 1, slack_.begin() + n_x_ + 1, 0);
    q_.clear();
    for (int x = 1; x <= n_x_; ++x) {
      if (st_[x] == x && !match_[x]) {
        pa_[x] = 0;
        state_[x] = 0;
        q_push(x);
      }
    }
    if (q_.empty()) return false;
    for (;;) {
      while (!q_.empty()) {
        const int u = q_.front();
        q_.pop_front();
        if (state_[st_[u]] == 1) continue;
        for (int v = 1; v <= n_; ++v) {
          if (g_[u][v].w > 0 && st_[u] != st_[v]) {
            if (e_delta(g_[u][v]) == 0) {
              if (on_found_edge(g_[u][v])) return true;
            } else {
              update_slack(u, st_[v]);
            }
          }
        }
      }
      long long d = kInf;
      for (int b = n_ + 1; b <= n_x_; ++b) {
        if (st_[b] == b && state_[b] == 1) d = std::min(d, lab_[b] / 2);
      }
      for (int x = 1; x <= n_x_; ++x) {
        if (st_[x] == x && slack_[x]) {
          if (state_[x] == -1) {
            d = std::min(d, e_delta(g_[slack_[x]][x]));
          } else if (state_[x] == 0) {
            d = std::min(d, e_delta(g_[slack_[x]][x]) / 2);
          }
        }
      }
      for (int u = 1; u <= n_; ++u) {
        if (state_[st_[u]] == 0) {
          if (lab_[u] <= d) return false;
          lab_[u] -= d;
        } else if (state_[st_[u]] == 1) {
          lab_[u] += d;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b) {
        if (st_[b] == b) {
          if (state_[b] == 0) {
            lab_[b] += d * 2;
          } else if (state_[b] == 1) {
            lab_[b] -= d * 2;
          }
        }
      }
      q_.clear();
      for (int x = 1; x <= n_x_; ++x) {
        if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
            e_delta(g_[slack_[x]][x]) == 0) {
          if (on_found_edge(g_[slack_[x]][x])) return true;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b) {
        if (st_[b] == b && state_[b] == 1 && lab_[b] == 0) expand_blossom(b);
      }
    }
  }

  int n_;
  int n_x_ = 0;
  int t_lca_ = 0;
  std::vector<std::vector<Edge>> g_;
  std::vector<long long> lab_;
  std::vector<int> match_, slack_, st_, pa_, state_, vis_;
  std::vector<std::vector<int>> flower_;
  std::vector<std::vector<int>> flower_from_;
  std::deque<int> q_;
};

std::vector<std::vector<long long>> scale_distances(const SymMatrix& d,
                                                    double* unit) {
  const int n = static_cast<int>(d.order());
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(d(i, j))) {
        throw Error(ErrorCode::kInput, "matching",
                    "distances must be finite");
      }
      dmax = std::max(dmax, std::abs(d(i, j)));
    }
  }
  const double scale =
      dmax > 0 ? static_cast<double>(1LL << 40) / dmax : 1.0;
  *unit = scale;
  std::vector<std::vector<long long>> w(n, std::vector<long long>(n, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      w[i][j] = std::llround(d(i, j) * scale);
    }
  }
  return w;
}

}  // namespace

Matching blossom_matching(const SymMatrix& d) {
  const int n = static_cast<int>(d.order());
  if (n % 2 != 0) {
    throw Error(ErrorCode::kInput, "matching",
                "perfect matching requires an even number of subjects");
  }
  Matching result;
  if (n == 0) return result;

  double unit = 1.0;
  auto w = scale_distances(d, &unit);
  long long cap = 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) cap = std::max(cap, w[i][j]);
  }
  ++cap;
  // Maximizing sum(cap - w) over matchings in a complete graph with positive
  // weights forces a perfect matching and minimizes sum(w).
  std::vector<std::vector<long long>> flipped(n, std::vector<long long>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) flipped[i][j] = (i == j) ? 0 : cap - w[i][j];
  }
  BlossomSolver solver(flipped);
  solver.solve();

  for (int i = 0; i < n; ++i) {
    const int j = solver.match(i);
    if (j < 0) {
      throw Error(ErrorCode::kInput, "matching",
                  "internal error: matching is not perfect");
    }
    if (i < j) {
      result.pairs.emplace_back(i, j);
      result.weight += d(i, j);
    }
  }
  result.objective = result.weight;
  return result;
}

Matching penalty_matching(const SymMatrix& d, double delta0) {
  if (!(delta0 > 0)) {
    throw Error(ErrorCode::kInput, "matching", "delta0 must be positive");
  }
  const int n = static_cast<int>(d.order());
  // Pairing two would-be-unmatched subjects costs exactly 2*delta0, so the
  // problem reduces to perfect matching under the capped distances.
  Matrix capped(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      capped(i, j) = (i == j) ? 0.0 : std::min(d(i, j), 2.0 * delta0);
    }
  }
  Matching perfect = blossom_matching(SymMatrix(capped));

  Matching result;
  const double cut = 2.0 * delta0 * (1.0 + 1e-12);
  for (const auto& [i, j] : perfect.pairs) {
    if (d(i, j) > cut) {
      result.unmatched.push_back(i);
      result.unmatched.push_back(j);
    } else {
      result.pairs.emplace_back(i, j);
      result.weight += d(i, j);
    }
  }
  std::sort(result.unmatched.begin(), result.unmatched.end());
  result.objective =
      result.weight + delta0 * static_cast<double>(result.unmatched.size());
  return result;
}

}  // namespace balopt
