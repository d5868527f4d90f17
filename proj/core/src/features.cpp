#include "backdiff/features.hpp"

#include <cmath>

namespace backdiff {

CycleCounts node_cycle_counts(const Eigen::MatrixXd& adj) {
  const Eigen::VectorXd deg = adj.rowwise().sum();
  const Eigen::MatrixXd a2 = adj * adj;
  const Eigen::MatrixXd a3 = a2 * adj;
  const Eigen::MatrixXd a4 = a3 * adj;
  const Eigen::MatrixXd a5 = a4 * adj;
  const Eigen::VectorXd tri = a3.diagonal();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(deg.size());
  CycleCounts c;
  c.c3 = tri / 2.0;
  c.c4 = (a4.diagonal() - deg.cwiseProduct(deg - ones) - adj * deg) / 2.0;
  // Closed 5-walks that are not cycles: a triangle through i with one
  // back-and-forth step (edges walked three times counted twice), or a
  // triangle hanging off a neighbour.
  const Eigen::VectorXd shared = adj.cwiseProduct(a2) * (deg - ones);
  c.c5 = (a5.diagonal() - 2.0 * tri.cwiseProduct(deg) + 3.0 * tri - adj * tri - 2.0 * shared) / 2.0;
  return c;
}

StructuralFeatures structural_features(const Graph& g, int t, int steps, int max_nodes) {
  const int n = g.n();
  const Eigen::MatrixXd adj = g.adjacency();
  const CycleCounts cycles = node_cycle_counts(adj);
  StructuralFeatures f;
  f.node.resize(n, kNodeFeatureDim);
  f.node.col(0) = adj.rowwise().sum() / 4.0;
  f.node.col(1) = cycles.c3 / 2.0;
  f.node.col(2) = cycles.c4 / 2.0;
  f.node.col(3) = cycles.c5 / 2.0;

  f.global.resize(kGlobalFeatureDim);
  const double tau = static_cast<double>(t) / steps;
  f.global(0) = tau;
  for (int k = 0; k < kTimeEmbeddingDim / 2; ++k) {
    const double freq = std::pow(2.0, k);
    f.global(1 + 2 * k) = std::sin(freq * tau);
    f.global(2 + 2 * k) = std::cos(freq * tau);
  }
  f.global(1 + kTimeEmbeddingDim) = static_cast<double>(n) / std::max(max_nodes, 1);
  const double scale = std::max(n, 1);
  f.global(2 + kTimeEmbeddingDim) = cycles.c3.sum() / 3.0 / scale;
  f.global(3 + kTimeEmbeddingDim) = cycles.c4.sum() / 4.0 / scale;
  f.global(4 + kTimeEmbeddingDim) = cycles.c5.sum() / 5.0 / scale;
  return f;
}

}  // namespace backdiff
