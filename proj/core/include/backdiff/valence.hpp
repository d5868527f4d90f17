#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "backdiff/graph.hpp"

namespace backdiff {

// Chemistry rules for validity checks.
//
// Bond orders are kept in half units (single = 2, aromatic = 3) so every
// comparison is exact integer arithmetic.
class ValenceTable {
 public:
  ValenceTable(std::vector<std::string> node_names, std::vector<int> max_valence,
               std::vector<std::string> edge_names, std::vector<int> bond_order_halves);

  // C, N, O, F with valences 4/3/2/1; none/single/double/triple/aromatic.
  static ValenceTable organic();

  int node_types() const noexcept { return static_cast<int>(node_names_.size()); }
  int edge_types() const noexcept { return static_cast<int>(edge_names_.size()); }

  int max_valence(int node_type) const;
  int bond_order_halves(int edge_type) const;
  double bond_order(int edge_type) const { return bond_order_halves(edge_type) / 2.0; }

  const std::string& node_name(int type) const;
  const std::string& edge_name(int type) const;
  // -1 when absent.
  int node_index(std::string_view name) const;

 private:
  std::vector<std::string> node_names_;
  std::vector<int> max_valence_;
  std::vector<std::string> edge_names_;
  std::vector<int> bond_halves_;
};

// Sum of incident bond orders at node i, in half units.
int bond_order_sum_halves(const Graph& g, const ValenceTable& vt, int i);

// Valence check with implicit hydrogen completion: a node is fine as long as
// its explicit bonds do not exceed its maximum valence.
bool is_valid_molecule(const Graph& g, const ValenceTable& vt);

}  // namespace backdiff
