#pragma once

#include <Eigen/Dense>

#include "backdiff/graph.hpp"

namespace backdiff {

// Number of simple k-cycles through each node, k = 3, 4, 5, from diagonals
// of adjacency powers.
struct CycleCounts {
  Eigen::VectorXd c3;
  Eigen::VectorXd c4;
  Eigen::VectorXd c5;
};

CycleCounts node_cycle_counts(const Eigen::MatrixXd& adjacency);

inline constexpr int kTimeEmbeddingDim = 16;
inline constexpr int kNodeFeatureDim = 4;                            // degree, c3, c4, c5
inline constexpr int kGlobalFeatureDim = 1 + kTimeEmbeddingDim + 1 + 3;  // t/T, sinusoid, n, cycles

// Inputs derived from the noisy graph; equivariant by construction since
// they come from adjacency algebra only.
struct StructuralFeatures {
  Eigen::MatrixXd node;        // n x kNodeFeatureDim
  Eigen::RowVectorXd global;   // 1 x kGlobalFeatureDim
};

StructuralFeatures structural_features(const Graph& g, int t, int steps, int max_nodes);

}  // namespace backdiff
