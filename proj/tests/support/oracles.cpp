#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace oracle {

namespace {

Eigen::MatrixXd step(double alpha, const Eigen::VectorXd& m) {
  const auto c = m.size();
  Eigen::MatrixXd q(c, c);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j) q(i, j) = (i == j ? alpha : 0.0) + (1.0 - alpha) * m[j];
  return q;
}

}  // namespace

Eigen::MatrixXd naive_cumulative(const std::vector<double>& alphas, int t, const Eigen::VectorXd& m) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(m.size(), m.size());
  for (int s = 1; s <= t; ++s) q = q * step(alphas[static_cast<std::size_t>(s - 1)], m);
  return q;
}

Eigen::VectorXd enumerate_posterior(const std::vector<double>& alphas, const Eigen::VectorXd& m, int z, int observed,
                                    int t) {
  const int c = static_cast<int>(m.size());
  std::vector<Eigen::MatrixXd> steps;
  for (int s = 1; s <= t; ++s) steps.push_back(step(alphas[static_cast<std::size_t>(s - 1)], m));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(c);
  // Trajectory z^1 .. z^t as a base-c counter.
  std::vector<int> traj(static_cast<std::size_t>(t), 0);
  for (;;) {
    if (traj.back() == observed) {
      double p = 1.0;
      int prev = z;
      for (int s = 0; s < t; ++s) {
        p *= steps[static_cast<std::size_t>(s)](prev, traj[static_cast<std::size_t>(s)]);
        prev = traj[static_cast<std::size_t>(s)];
      }
      const int before = t >= 2 ? traj[static_cast<std::size_t>(t - 2)] : z;
      out[before] += p;
    }
    int k = 0;
    while (k < t && ++traj[static_cast<std::size_t>(k)] == c) traj[static_cast<std::size_t>(k++)] = 0;
    if (k == t) break;
  }
  return out / out.sum();
}

Eigen::VectorXd propagate(const std::vector<double>& alphas, const Eigen::VectorXd& m, int z, int t) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m.size());
  row[z] = 1.0;
  for (int s = 1; s <= t; ++s) row = row * step(alphas[static_cast<std::size_t>(s - 1)], m);
  return row.transpose();
}

bool isomorphic(const Graph& a, const Graph& b) {
  if (a.n() != b.n()) return false;
  const int n = a.n();
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (a.node(i) != b.node(p[static_cast<std::size_t>(i)])) ok = false;
      for (int j = i + 1; j < n && ok; ++j)
        if (a.edge(i, j) != b.edge(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)])) ok = false;
    }
    if (ok) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

double enumerate_ged(const Graph& a, const Graph& b) {
  const int n1 = a.n();
  const int n2 = b.n();
  std::vector<int> f(static_cast<std::size_t>(n1), -1);
  std::vector<bool> used(static_cast<std::size_t>(n2), false);
  double best = 1e18;
  std::function<void(int)> rec = [&](int u) {
    if (u == n1) {
      double c = 0.0;
      for (int i = 0; i < n1; ++i) {
        const int fi = f[static_cast<std::size_t>(i)];
        if (fi < 0 || a.node(i) != b.node(fi)) c += 1.0;
      }
      for (int v = 0; v < n2; ++v)
        if (!used[static_cast<std::size_t>(v)]) c += 1.0;
      // Every unordered pair of the union of both node sets.
      for (int i = 0; i < n1; ++i)
        for (int j = i + 1; j < n1; ++j) {
          const int fi = f[static_cast<std::size_t>(i)];
          const int fj = f[static_cast<std::size_t>(j)];
          const int e2 = (fi >= 0 && fj >= 0) ? b.edge(fi, fj) : 0;
          if (a.edge(i, j) != e2) c += 1.0;
        }
      std::vector<bool> image(static_cast<std::size_t>(n2), false);
      for (int i = 0; i < n1; ++i)
        if (f[static_cast<std::size_t>(i)] >= 0) image[static_cast<std::size_t>(f[static_cast<std::size_t>(i)])] = true;
      for (int x = 0; x < n2; ++x)
        for (int y = x + 1; y < n2; ++y)
          if ((!image[static_cast<std::size_t>(x)] || !image[static_cast<std::size_t>(y)]) && b.edge(x, y) != 0) c += 1.0;
      best = std::min(best, c);
      return;
    }
    f[static_cast<std::size_t>(u)] = -1;
    rec(u + 1);
    for (int v = 0; v < n2; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = true;
      f[static_cast<std::size_t>(u)] = v;
      rec(u + 1);
      used[static_cast<std::size_t>(v)] = false;
      f[static_cast<std::size_t>(u)] = -1;
    }
  };
  rec(0);
  return best;
}

std::vector<double> cycles_through(const Graph& g, int k) {
  const int n = g.n();
  std::vector<double> count(static_cast<std::size_t>(n), 0.0);
  std::vector<int> path;
  std::vector<bool> on(static_cast<std::size_t>(n), false);
  std::function<void(int, int)> dfs = [&](int start, int u) {
    if (static_cast<int>(path.size()) == k) {
      if (g.edge(u, start) != 0) {
        // Count each cycle once: start is its minimum node and the second
        // node is smaller than the last.
        if (path[1] < path.back())
          for (int v : path) count[static_cast<std::size_t>(v)] += 1.0;
      }
      return;
    }
    for (int v = start + 1; v < n; ++v) {
      if (on[static_cast<std::size_t>(v)] || g.edge(u, v) == 0) continue;
      on[static_cast<std::size_t>(v)] = true;
      path.push_back(v);
      dfs(start, v);
      path.pop_back();
      on[static_cast<std::size_t>(v)] = false;
    }
  };
  for (int s = 0; s < n; ++s) {
    path = {s};
    on[static_cast<std::size_t>(s)] = true;
    dfs(s, s);
    on[static_cast<std::size_t>(s)] = false;
  }
  return count;
}

std::vector<double> charpoly(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  // det(lambda I - A) = sum_k c_k lambda^k, c_n = 1.
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[static_cast<std::size_t>(n)] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(n - k + 1)] * id;
    c[static_cast<std::size_t>(n - k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

double poly_eval(const std::vector<double>& c, double x) {
  double r = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
  return r;
}

Graph random_graph(int n, int a, int d, double edge_p, backdiff::Rng& rng) {
  Graph g(n, a, d);
  for (int i = 0; i < n; ++i) g.set_node(i, static_cast<int>(rng.below(static_cast<std::uint64_t>(a))));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < edge_p) g.set_edge(i, j, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - 1))));
  return g;
}

Eigen::VectorXd random_distribution(int c, backdiff::Rng& rng, double floor) {
  Eigen::VectorXd m(c);
  for (int k = 0; k < c; ++k) m[k] = floor + rng.uniform();
  return m / m.sum();
}

std::vector<double> random_alphas(int steps, backdiff::Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(steps));
  for (auto& x : a) x = 0.05 + 0.9 * rng.uniform();
  return a;
}

double tv(const Eigen::VectorXd& p, const Eigen::VectorXd& q) { return 0.5 * (p - q).cwiseAbs().sum(); }

}  // namespace oracle
