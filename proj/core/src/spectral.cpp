#include "backdiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "backdiff/error.hpp"

namespace backdiff {

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  if (input.rows() != input.cols()) throw Error(ErrorCode::ShapeMismatch, "eigen solver needs a square matrix");
  const Eigen::Index n = input.rows();
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();
  const double target = scale > 0.0 ? tol * scale : tol;

  const auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > target; ++sweep) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  out.sweeps = sweep;
  return out;
}

Eigen::MatrixXd normalized_laplacian(const Graph& g) {
  const Eigen::MatrixXd adj = g.adjacency();
  const int n = g.n();
  Eigen::VectorXd inv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    const double d = adj.row(i).sum();
    inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * adj * inv_sqrt.asDiagonal());
  for (int i = 0; i < n; ++i) l(i, i) = inv_sqrt[i] > 0.0 ? 1.0 : 0.0;
  return l;
}

Eigen::VectorXd laplacian_spectrum(const Graph& g) { return jacobi_eigen(normalized_laplacian(g)).values; }

double nld(const Graph& g1, const Graph& g2) {
  if (g1.n() == 0 || g2.n() == 0) throw Error(ErrorCode::OutOfRange, "nld needs nonempty graphs");
  const Eigen::VectorXd s1 = laplacian_spectrum(g1);
  const Eigen::VectorXd s2 = laplacian_spectrum(g2);
  const Eigen::Index m = std::max(s1.size(), s2.size());
  Eigen::VectorXd p1 = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd p2 = Eigen::VectorXd::Zero(m);
  // Zero padding goes at the low end so the padded vectors stay sorted.
  p1.tail(s1.size()) = s1;
  p2.tail(s2.size()) = s2;
  return (p1 - p2).norm() / std::sqrt(static_cast<double>(m));
}

}  // namespace backdiff
