#include "backdiff/valence.hpp"

#include <algorithm>

#include "backdiff/error.hpp"

namespace backdiff {

ValenceTable::ValenceTable(std::vector<std::string> node_names, std::vector<int> max_valence,
                           std::vector<std::string> edge_names, std::vector<int> bond_order_halves)
    : node_names_(std::move(node_names)),
      max_valence_(std::move(max_valence)),
      edge_names_(std::move(edge_names)),
      bond_halves_(std::move(bond_order_halves)) {
  if (node_names_.empty() || node_names_.size() != max_valence_.size()) {
    throw Error(ErrorCode::BadDims, "valence table node entries mismatch");
  }
  if (edge_names_.size() < 2 || edge_names_.size() != bond_halves_.size()) {
    throw Error(ErrorCode::BadDims, "valence table edge entries mismatch");
  }
  if (bond_halves_[kNoEdge] != 0) throw Error(ErrorCode::BadDims, "edge type 0 must have order 0");
  if (std::any_of(max_valence_.begin(), max_valence_.end(), [](int v) { return v < 0; }) ||
      std::any_of(bond_halves_.begin(), bond_halves_.end(), [](int v) { return v < 0; })) {
    throw Error(ErrorCode::BadDims, "negative valence or bond order");
  }
}

ValenceTable ValenceTable::organic() {
  return ValenceTable({"C", "N", "O", "F"}, {4, 3, 2, 1},
                      {"none", "single", "double", "triple", "aromatic"}, {0, 2, 4, 6, 3});
}

int ValenceTable::max_valence(int node_type) const {
  if (node_type < 0 || node_type >= node_types()) {
    throw Error(ErrorCode::UnknownType, "node type " + std::to_string(node_type));
  }
  return max_valence_[static_cast<std::size_t>(node_type)];
}

int ValenceTable::bond_order_halves(int edge_type) const {
  if (edge_type < 0 || edge_type >= edge_types()) {
    throw Error(ErrorCode::UnknownType, "edge type " + std::to_string(edge_type));
  }
  return bond_halves_[static_cast<std::size_t>(edge_type)];
}

const std::string& ValenceTable::node_name(int type) const {
  if (type < 0 || type >= node_types()) throw Error(ErrorCode::UnknownType, "node type " + std::to_string(type));
  return node_names_[static_cast<std::size_t>(type)];
}

const std::string& ValenceTable::edge_name(int type) const {
  if (type < 0 || type >= edge_types()) throw Error(ErrorCode::UnknownType, "edge type " + std::to_string(type));
  return edge_names_[static_cast<std::size_t>(type)];
}

int ValenceTable::node_index(std::string_view name) const {
  const auto it = std::find(node_names_.begin(), node_names_.end(), name);
  return it == node_names_.end() ? -1 : static_cast<int>(it - node_names_.begin());
}

int bond_order_sum_halves(const Graph& g, const ValenceTable& vt, int i) {
  int total = 0;
  for (int j = 0; j < g.n(); ++j)
    if (j != i) total += vt.bond_order_halves(g.edge(i, j));
  return total;
}

bool is_valid_molecule(const Graph& g, const ValenceTable& vt) {
  if (g.node_types() > vt.node_types() || g.edge_types() > vt.edge_types()) {
    throw Error(ErrorCode::UnknownType, "graph uses types absent from the valence table");
  }
  for (int i = 0; i < g.n(); ++i) {
    if (g.edge(i, i) != kNoEdge) return false;
    if (bond_order_sum_halves(g, vt, i) > 2 * vt.max_valence(g.node(i))) return false;
  }
  return true;
}

}  // namespace backdiff
