#pragma once

#include <cstdint>
#include <vector>

#include "backdiff/graph.hpp"

namespace backdiff {

// Node order putting g into canonical form: position k of the result holds
// the input node placed k-th. Isomorphic graphs yield identical canonical
// encodings.
//
// For n <= 8 the form is the lexicographic minimum over every node order
// (orders not sorted by node type can never win, so only those are visited).
// Larger graphs use colour refinement followed by an
// individualisation-refinement search over the remaining ties.
std::vector<int> canonical_order(const Graph& g);

// Byte encoding (n, node types, upper-triangle edge types) under the
// canonical order.
std::vector<std::uint8_t> canonical_encoding(const Graph& g);

std::uint64_t canonical_hash(const Graph& g);

// Encoding of g under an explicit node order; exposed for brute-force tests.
std::vector<std::uint8_t> encode_in_order(const Graph& g, const std::vector<int>& order);

}  // namespace backdiff
