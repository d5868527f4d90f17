#include "backdiff/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "backdiff/error.hpp"
#include "backdiff/rng.hpp"

namespace backdiff {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::HostTooSmall: return "HostTooSmall";
    case ErrorCode::InvalidTrigger: return "InvalidTrigger";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotAPermutation: return "NotAPermutation";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::BadT: return "BadT";
    case ErrorCode::BadDistribution: return "BadDistribution";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::InsufficientHosts: return "InsufficientHosts";
    case ErrorCode::MalformedCountsLine: return "MalformedCountsLine";
    case ErrorCode::TruncatedBlock: return "TruncatedBlock";
    case ErrorCode::BadRecord: return "BadRecord";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Graph::Graph(int n, int node_types, int edge_types) : n_(n), a_(node_types), d_(edge_types) {
  if (n < 0 || node_types <= 0 || edge_types <= 1 || node_types > 255 || edge_types > 255) {
    throw Error(ErrorCode::BadDims, "graph dims n=" + std::to_string(n) + " a=" +
                                        std::to_string(node_types) + " d=" + std::to_string(edge_types));
  }
  nodes_.assign(static_cast<std::size_t>(n), 0);
  edges_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), kNoEdge);
}

void Graph::set_node(int i, int type) {
  if (i < 0 || i >= n_) throw Error(ErrorCode::OutOfRange, "node index " + std::to_string(i));
  if (type < 0 || type >= a_) throw Error(ErrorCode::UnknownType, "node type " + std::to_string(type));
  nodes_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(type);
}

void Graph::set_edge(int i, int j, int type) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_) {
    throw Error(ErrorCode::OutOfRange, "edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  if (type < 0 || type >= d_) throw Error(ErrorCode::UnknownType, "edge type " + std::to_string(type));
  if (i == j) {
    if (type != kNoEdge) throw Error(ErrorCode::InvalidTrigger, "self edge at node " + std::to_string(i));
    return;
  }
  edges_[pair_index(i, j, n_)] = static_cast<std::uint8_t>(type);
  edges_[pair_index(j, i, n_)] = static_cast<std::uint8_t>(type);
}

int Graph::edge_count() const {
  int count = 0;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) count += edge(i, j) != kNoEdge;
  return count;
}

int Graph::degree(int i) const {
  int deg = 0;
  for (int j = 0; j < n_; ++j) deg += (j != i && edge(i, j) != kNoEdge);
  return deg;
}

Eigen::MatrixXd Graph::node_one_hot() const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_, a_);
  for (int i = 0; i < n_; ++i) x(i, node(i)) = 1.0;
  return x;
}

Eigen::MatrixXd Graph::edge_one_hot() const {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_) * n_, d_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) e(static_cast<Eigen::Index>(pair_index(i, j, n_)), edge(i, j)) = 1.0;
  return e;
}

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (i != j && edge(i, j) != kNoEdge) adj(i, j) = 1.0;
  return adj;
}

void Graph::validate() const {
  if (nodes_.size() != static_cast<std::size_t>(n_) ||
      edges_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_)) {
    throw Error(ErrorCode::DimensionMismatch, "graph storage does not match n");
  }
  for (int i = 0; i < n_; ++i) {
    if (node(i) >= a_) throw Error(ErrorCode::UnknownType, "node type out of range at " + std::to_string(i));
    if (edge(i, i) != kNoEdge) throw Error(ErrorCode::InvalidTrigger, "non-empty diagonal");
    for (int j = 0; j < n_; ++j) {
      if (edge(i, j) >= d_) throw Error(ErrorCode::UnknownType, "edge type out of range");
      if (edge(i, j) != edge(j, i)) throw Error(ErrorCode::DimensionMismatch, "asymmetric edge tensor");
    }
  }
}

SoftGraph::SoftGraph(int n_nodes, int node_types, int edge_types)
    : n(n_nodes),
      px(Eigen::MatrixXd::Zero(n_nodes, node_types)),
      pe(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_nodes) * n_nodes, edge_types)) {}

SoftGraph SoftGraph::from_graph(const Graph& g) {
  SoftGraph s;
  s.n = g.n();
  s.px = g.node_one_hot();
  s.pe = g.edge_one_hot();
  return s;
}

bool SoftGraph::is_valid(double tol) const {
  if (px.rows() != n || pe.rows() != static_cast<Eigen::Index>(n) * n) return false;
  if ((px.array() < 0.0).any() || (pe.array() < 0.0).any()) return false;
  if (!px.allFinite() || !pe.allFinite()) return false;
  for (Eigen::Index i = 0; i < px.rows(); ++i)
    if (std::abs(px.row(i).sum() - 1.0) > tol) return false;
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(pair_index(i, i, n));
    if (pe(ii, kNoEdge) != 1.0) return false;
    for (int j = 0; j < n; ++j) {
      const auto ij = static_cast<Eigen::Index>(pair_index(i, j, n));
      const auto ji = static_cast<Eigen::Index>(pair_index(j, i, n));
      if (std::abs(pe.row(ij).sum() - 1.0) > tol) return false;
      if (pe.row(ij) != pe.row(ji)) return false;
    }
  }
  return true;
}

void SoftGraph::validate(double tol) const {
  if (!is_valid(tol)) throw Error(ErrorCode::BadDistribution, "soft graph violates its invariants");
}

Permutation::Permutation(std::vector<int> map) : map_(std::move(map)) {
  std::vector<char> seen(map_.size(), 0);
  for (int v : map_) {
    if (v < 0 || static_cast<std::size_t>(v) >= map_.size() || seen[static_cast<std::size_t>(v)]) {
      throw Error(ErrorCode::NotAPermutation, "value " + std::to_string(v) + " repeated or out of range");
    }
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> map(static_cast<std::size_t>(n));
  std::iota(map.begin(), map.end(), 0);
  return Permutation(std::move(map));
}

Permutation Permutation::random(int n, std::uint64_t seed) {
  std::vector<int> map(static_cast<std::size_t>(n));
  std::iota(map.begin(), map.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
  }
  return Permutation(std::move(map));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[static_cast<std::size_t>(map_[i])] = static_cast<int>(i);
  return Permutation(std::move(inv));
}

Graph permute(const Graph& g, const Permutation& pi) {
  if (pi.size() != g.n()) throw Error(ErrorCode::NotAPermutation, "permutation size differs from n");
  Graph out(g.n(), g.node_types(), g.edge_types());
  for (int i = 0; i < g.n(); ++i) {
    out.set_node(pi(i), g.node(i));
    for (int j = i + 1; j < g.n(); ++j) out.set_edge(pi(i), pi(j), g.edge(i, j));
  }
  return out;
}

SoftGraph permute(const SoftGraph& g, const Permutation& pi) {
  if (pi.size() != g.n) throw Error(ErrorCode::NotAPermutation, "permutation size differs from n");
  SoftGraph out(g.n, g.node_types(), g.edge_types());
  for (int i = 0; i < g.n; ++i) {
    out.px.row(pi(i)) = g.px.row(i);
    for (int j = 0; j < g.n; ++j) {
      out.pe.row(static_cast<Eigen::Index>(pair_index(pi(i), pi(j), g.n))) =
          g.pe.row(static_cast<Eigen::Index>(pair_index(i, j, g.n)));
    }
  }
  return out;
}

std::string to_string(const Graph& g) {
  std::ostringstream os;
  os << "Graph(n=" << g.n() << ", nodes=[";
  for (int i = 0; i < g.n(); ++i) os << (i ? "," : "") << g.node(i);
  os << "], edges=[";
  bool first = true;
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j)
      if (g.edge(i, j) != kNoEdge) {
        os << (first ? "" : ",") << i << "-" << j << ":" << g.edge(i, j);
        first = false;
      }
  os << "])";
  return os.str();
}

}  // namespace backdiff
