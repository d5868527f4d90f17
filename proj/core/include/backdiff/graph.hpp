#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace backdiff {

// Edge-type index 0 always means "no edge".
inline constexpr int kNoEdge = 0;

inline constexpr std::size_t pair_index(int i, int j, int n) noexcept {
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
}

// A categorical graph with n nodes over a node types and d edge types.
//
// Storage is by type index; the one-hot matrix X (n x a) and tensor E
// (n x n x d, flattened to n^2 x d with row i*n+j) are materialized on demand.
// Symmetry and the no-edge diagonal are structural: set_edge writes both
// (i,j) and (j,i) and the diagonal cannot be written.
class Graph {
 public:
  Graph() = default;
  Graph(int n, int node_types, int edge_types);

  int n() const noexcept { return n_; }
  int node_types() const noexcept { return a_; }
  int edge_types() const noexcept { return d_; }

  int node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int edge(int i, int j) const { return edges_[pair_index(i, j, n_)]; }

  void set_node(int i, int type);
  void set_edge(int i, int j, int type);

  std::span<const std::uint8_t> node_span() const noexcept { return nodes_; }
  std::span<const std::uint8_t> edge_span() const noexcept { return edges_; }

  // Number of unordered pairs carrying a non-zero edge type.
  int edge_count() const;
  int degree(int i) const;

  Eigen::MatrixXd node_one_hot() const;
  Eigen::MatrixXd edge_one_hot() const;
  // Binary adjacency (any edge type != 0).
  Eigen::MatrixXd adjacency() const;

  // Throws DimensionMismatch / UnknownType when an invariant is broken.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_ = 0;
  int a_ = 0;
  int d_ = 0;
  std::vector<std::uint8_t> nodes_;
  std::vector<std::uint8_t> edges_;
};

// Per-node and per-pair categorical distributions over a graph.
//
// px is n x a; pe is n^2 x d with row i*n+j. Symmetry and the no-edge
// diagonal are invariants maintained by every producer in this library.
struct SoftGraph {
  int n = 0;
  Eigen::MatrixXd px;
  Eigen::MatrixXd pe;

  SoftGraph() = default;
  SoftGraph(int n, int node_types, int edge_types);

  int node_types() const noexcept { return static_cast<int>(px.cols()); }
  int edge_types() const noexcept { return static_cast<int>(pe.cols()); }

  // One-hot encoding of a hard graph.
  static SoftGraph from_graph(const Graph& g);

  // Checks row sums within tol, nonnegativity, symmetry and the diagonal.
  bool is_valid(double tol = 1e-9) const;
  void validate(double tol = 1e-9) const;
};

// A bijection on [0, n): node i of the input moves to position map[i].
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> map);

  static Permutation identity(int n);
  static Permutation random(int n, std::uint64_t seed);

  int size() const noexcept { return static_cast<int>(map_.size()); }
  int operator()(int i) const { return map_[static_cast<std::size_t>(i)]; }
  Permutation inverse() const;
  const std::vector<int>& map() const noexcept { return map_; }

 private:
  std::vector<int> map_;
};

// X'[pi(i)] = X[i], E'[pi(i), pi(j)] = E[i, j].
Graph permute(const Graph& g, const Permutation& pi);
SoftGraph permute(const SoftGraph& g, const Permutation& pi);

std::string to_string(const Graph& g);

}  // namespace backdiff
