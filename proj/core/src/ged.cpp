#include "backdiff/ged.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "backdiff/error.hpp"

namespace backdiff {

namespace {

constexpr double kForbidden = 1e9;

double node_cost(int a, int b, const EditCosts& c) { return a == b ? 0.0 : c.node_sub; }

double edge_cost(int a, int b, const EditCosts& c) {
  if (a == b) return 0.0;
  if (a == kNoEdge || b == kNoEdge) return c.edge_indel;
  return std::min(c.edge_sub, 2.0 * c.edge_indel);
}

// Edit cost between two multisets of edge labels (counts per label, no-edge
// excluded).
double multiset_cost(const std::vector<int>& x, const std::vector<int>& y, const EditCosts& c) {
  int sx = 0, sy = 0, common = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    common += std::min(x[k], y[k]);
  }
  const double sub = std::min(c.edge_sub, 2.0 * c.edge_indel);
  return (std::min(sx, sy) - common) * sub + std::abs(sx - sy) * c.edge_indel;
}

class Search {
 public:
  Search(const Graph& g1, const Graph& g2, const GedOptions& opt)
      : g1_(g1), g2_(g2), c_(opt.costs), budget_(opt.max_expansions) {
    n1_ = g1.n();
    n2_ = g2.n();
    d_ = std::max(g1.edge_types(), g2.edge_types());
    order_.resize(static_cast<std::size_t>(n1_));
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return g1.degree(a) > g1.degree(b); });
    map_.assign(static_cast<std::size_t>(n1_), -1);
    assigned_.assign(static_cast<std::size_t>(n1_), false);
    used_.assign(static_cast<std::size_t>(n2_), false);
  }

  // Lower bound on the cost still to pay given the current partial map, and
  // optionally the completion suggested by the assignment.
  double bound(std::vector<int>* completion) const {
    std::vector<int> r1, r2;
    for (int u = 0; u < n1_; ++u)
      if (!assigned_[static_cast<std::size_t>(u)]) r1.push_back(u);
    for (int v = 0; v < n2_; ++v)
      if (!used_[static_cast<std::size_t>(v)]) r2.push_back(v);
    const auto s1 = static_cast<Eigen::Index>(r1.size());
    const auto s2 = static_cast<Eigen::Index>(r2.size());
    if (s1 + s2 == 0) return 0.0;

    // Label histograms of edges into the unresolved parts.
    const auto hist1 = [&](int u) {
      std::vector<int> h(static_cast<std::size_t>(d_), 0);
      for (int w : r1)
        if (w != u && g1_.edge(u, w) != kNoEdge) ++h[static_cast<std::size_t>(g1_.edge(u, w))];
      return h;
    };
    const auto hist2 = [&](int v) {
      std::vector<int> h(static_cast<std::size_t>(d_), 0);
      for (int w : r2)
        if (w != v && g2_.edge(v, w) != kNoEdge) ++h[static_cast<std::size_t>(g2_.edge(v, w))];
      return h;
    };
    std::vector<std::vector<int>> h1, h2;
    for (int u : r1) h1.push_back(hist1(u));
    for (int v : r2) h2.push_back(hist2(v));
    const std::vector<int> empty(static_cast<std::size_t>(d_), 0);

    const Eigen::Index m = s1 + s2;
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < s1; ++a) {
      const int u = r1[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < s2; ++b) {
        const int v = r2[static_cast<std::size_t>(b)];
        double c = node_cost(g1_.node(u), g2_.node(v), c_);
        for (int w = 0; w < n1_; ++w) {
          if (!assigned_[static_cast<std::size_t>(w)]) continue;
          const int fw = map_[static_cast<std::size_t>(w)];
          c += edge_cost(g1_.edge(u, w), fw < 0 ? kNoEdge : g2_.edge(v, fw), c_);
        }
        c += 0.5 * multiset_cost(h1[static_cast<std::size_t>(a)], h2[static_cast<std::size_t>(b)], c_);
        cost(a, b) = c;
      }
      for (Eigen::Index b = 0; b < s1; ++b) {
        if (a != b) {
          cost(a, s2 + b) = kForbidden;
          continue;
        }
        double c = c_.node_indel;
        for (int w = 0; w < n1_; ++w)
          if (assigned_[static_cast<std::size_t>(w)]) c += edge_cost(g1_.edge(u, w), kNoEdge, c_);
        c += 0.5 * multiset_cost(h1[static_cast<std::size_t>(a)], empty, c_);
        cost(a, s2 + b) = c;
      }
    }
    for (Eigen::Index a = 0; a < s2; ++a) {
      const int v = r2[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < s2; ++b) {
        if (a != b) {
          cost(s1 + a, b) = kForbidden;
          continue;
        }
        double c = c_.node_indel;
        for (int w = 0; w < n2_; ++w)
          if (used_[static_cast<std::size_t>(w)]) c += edge_cost(kNoEdge, g2_.edge(v, w), c_);
        c += 0.5 * multiset_cost(empty, h2[static_cast<std::size_t>(a)], c_);
        cost(s1 + a, b) = c;
      }
    }
    double total = 0.0;
    const std::vector<int> assign = solve_assignment(cost, &total);
    if (completion) {
      *completion = map_;
      for (Eigen::Index a = 0; a < s1; ++a) {
        const int col = assign[static_cast<std::size_t>(a)];
        (*completion)[static_cast<std::size_t>(r1[static_cast<std::size_t>(a)])] =
            col < s2 ? r2[static_cast<std::size_t>(col)] : -1;
      }
    }
    return total;
  }

  // Cost added by mapping u to v (v = -1: delete) given earlier decisions.
  double increment(int u, int v) const {
    double c = v < 0 ? c_.node_indel : node_cost(g1_.node(u), g2_.node(v), c_);
    for (int w = 0; w < n1_; ++w) {
      if (!assigned_[static_cast<std::size_t>(w)]) continue;
      const int fw = map_[static_cast<std::size_t>(w)];
      c += edge_cost(g1_.edge(u, w), (v < 0 || fw < 0) ? kNoEdge : g2_.edge(v, fw), c_);
    }
    return c;
  }

  // Insertions of unused g2 nodes plus their incident edges.
  double completion_cost() const {
    double c = 0.0;
    for (int v = 0; v < n2_; ++v) {
      if (used_[static_cast<std::size_t>(v)]) continue;
      c += c_.node_indel;
      for (int w = 0; w < n2_; ++w) {
        if (w == v) continue;
        // Count each unused-unused edge once.
        if (!used_[static_cast<std::size_t>(w)] && w < v) continue;
        c += edge_cost(kNoEdge, g2_.edge(v, w), c_);
      }
    }
    return c;
  }

  GedResult run(bool exact) {
    std::vector<int> start;
    const double root = bound(&start);
    GedResult r;
    if (!exact) {
      r.cost = root;
      r.exact = false;
      return r;
    }
    best_ = edit_path_cost(g1_, g2_, start, c_);
    dfs(0, 0.0);
    r.cost = best_;
    r.exact = !out_of_budget_;
    r.expansions = expansions_;
    return r;
  }

 private:
  void dfs(int depth, double g) {
    if (out_of_budget_) return;
    if (budget_ > 0 && expansions_ >= budget_) {
      out_of_budget_ = true;
      return;
    }
    ++expansions_;
    if (depth == n1_) {
      best_ = std::min(best_, g + completion_cost());
      return;
    }
    const int u = order_[static_cast<std::size_t>(depth)];
    struct Child {
      int v;
      double g;
      double lb;
    };
    std::vector<Child> children;
    for (int v = -1; v < n2_; ++v) {
      if (v >= 0 && used_[static_cast<std::size_t>(v)]) continue;
      const double gc = g + increment(u, v);
      if (gc >= best_ - 1e-9) continue;
      set(u, v);
      const double lb = gc + bound(nullptr);
      unset(u, v);
      if (lb < best_ - 1e-9) children.push_back({v, gc, lb});
    }
    std::stable_sort(children.begin(), children.end(), [](const Child& x, const Child& y) { return x.lb < y.lb; });
    for (const auto& ch : children) {
      if (ch.lb >= best_ - 1e-9) break;
      set(u, ch.v);
      dfs(depth + 1, ch.g);
      unset(u, ch.v);
    }
  }

  void set(int u, int v) {
    map_[static_cast<std::size_t>(u)] = v;
    assigned_[static_cast<std::size_t>(u)] = true;
    if (v >= 0) used_[static_cast<std::size_t>(v)] = true;
  }
  void unset(int u, int v) {
    map_[static_cast<std::size_t>(u)] = -1;
    assigned_[static_cast<std::size_t>(u)] = false;
    if (v >= 0) used_[static_cast<std::size_t>(v)] = false;
  }

  const Graph& g1_;
  const Graph& g2_;
  EditCosts c_;
  std::int64_t budget_;
  int n1_ = 0, n2_ = 0, d_ = 0;
  std::vector<int> order_;
  std::vector<int> map_;
  std::vector<bool> assigned_;
  std::vector<bool> used_;
  double best_ = std::numeric_limits<double>::infinity();
  std::int64_t expansions_ = 0;
  bool out_of_budget_ = false;
};

}  // namespace

double edit_path_cost(const Graph& g1, const Graph& g2, const std::vector<int>& mapping, const EditCosts& costs) {
  const int n1 = g1.n();
  const int n2 = g2.n();
  if (static_cast<int>(mapping.size()) != n1) throw Error(ErrorCode::DimensionMismatch, "mapping size differs from g1");
  std::vector<int> pre(static_cast<std::size_t>(n2), -1);
  double c = 0.0;
  for (int u = 0; u < n1; ++u) {
    const int v = mapping[static_cast<std::size_t>(u)];
    if (v < -1 || v >= n2) throw Error(ErrorCode::OutOfRange, "mapping target out of range");
    if (v < 0) {
      c += costs.node_indel;
      continue;
    }
    if (pre[static_cast<std::size_t>(v)] >= 0) throw Error(ErrorCode::NotAPermutation, "mapping is not injective");
    pre[static_cast<std::size_t>(v)] = u;
    c += node_cost(g1.node(u), g2.node(v), costs);
  }
  for (int v = 0; v < n2; ++v)
    if (pre[static_cast<std::size_t>(v)] < 0) c += costs.node_indel;
  for (int u = 0; u < n1; ++u) {
    for (int w = u + 1; w < n1; ++w) {
      const int fu = mapping[static_cast<std::size_t>(u)];
      const int fw = mapping[static_cast<std::size_t>(w)];
      c += edge_cost(g1.edge(u, w), (fu < 0 || fw < 0) ? kNoEdge : g2.edge(fu, fw), costs);
    }
  }
  for (int x = 0; x < n2; ++x) {
    for (int y = x + 1; y < n2; ++y) {
      if (pre[static_cast<std::size_t>(x)] >= 0 && pre[static_cast<std::size_t>(y)] >= 0) continue;
      c += edge_cost(kNoEdge, g2.edge(x, y), costs);
    }
  }
  return c;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double* total) {
  if (cost.rows() != cost.cols()) throw Error(ErrorCode::ShapeMismatch, "assignment needs a square matrix");
  const int n = static_cast<int>(cost.rows());
  // Shortest augmenting path with potentials, 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<bool> done(static_cast<std::size_t>(n) + 1, false);
    do {
      done[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (done[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (done[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  double sum = 0.0;
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)];
    assign[static_cast<std::size_t>(i - 1)] = j - 1;
    sum += cost(i - 1, j - 1);
  }
  if (total) *total = sum;
  return assign;
}

GedResult ged(const Graph& g1, const Graph& g2, const GedOptions& options) {
  const bool exact = std::max(g1.n(), g2.n()) <= options.exact_limit;
  Search search(g1, g2, options);
  GedResult r = search.run(exact);
  const int denom = std::max(g1.n(), g2.n());
  r.normalized = denom > 0 ? r.cost / denom : 0.0;
  return r;
}

}  // namespace backdiff
