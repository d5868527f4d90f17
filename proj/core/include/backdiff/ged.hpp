#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "backdiff/graph.hpp"

namespace backdiff {

struct EditCosts {
  double node_sub = 1.0;
  double node_indel = 1.0;
  double edge_sub = 1.0;
  double edge_indel = 1.0;
};

struct GedOptions {
  EditCosts costs{};
  int exact_limit = 12;             // larger graphs get the assignment bound
  std::int64_t max_expansions = 0;  // 0: unlimited search
};

struct GedResult {
  double cost = 0.0;
  double normalized = 0.0;  // cost / max(n1, n2)
  bool exact = true;        // false: "approx", assignment-based value
  std::int64_t expansions = 0;
};

// Cost of the edit path induced by a node map: mapping[u] is the g2 node
// that u becomes, or -1 when u is deleted. g2 nodes outside the image are
// inserted.
double edit_path_cost(const Graph& g1, const Graph& g2, const std::vector<int>& mapping, const EditCosts& costs = {});

// Minimum-cost perfect assignment on a square cost matrix. Returns
// assignment[row] = column and writes the total into *total when given.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double* total = nullptr);

// Exact graph edit distance by depth-first branch and bound with an
// assignment lower bound; beyond exact_limit nodes the root bound itself
// is returned and marked inexact.
GedResult ged(const Graph& g1, const Graph& g2, const GedOptions& options = {});

}  // namespace backdiff
