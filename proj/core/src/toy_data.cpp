#include <algorithm>
#include <numeric>

#include "backdiff/error.hpp"
#include "backdiff/io.hpp"
#include "backdiff/rng.hpp"

namespace backdiff {

bool is_connected(const Graph& g) {
  const int n = g.n();
  if (n == 0) return true;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (!seen[static_cast<std::size_t>(v)] && g.edge(u, v) != kNoEdge) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

namespace {

// Rough heavy-atom and bond mixes of small organic molecules.
constexpr double kAtomWeights[] = {0.72, 0.12, 0.13, 0.03};  // C N O F
constexpr double kBondWeights[] = {0.0, 0.78, 0.18, 0.04};   // none single double triple
constexpr int kToyEdgeTypes = 4;

// Tree growth plus occasional ring closures, rejected until valid.
Graph propose(int n, const ValenceTable& vt, Rng& rng) {
  Graph g(n, vt.node_types(), kToyEdgeTypes);
  std::vector<int> free_halves(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int t = static_cast<int>(rng.categorical(kAtomWeights));
    g.set_node(i, t);
    free_halves[static_cast<std::size_t>(i)] = 2 * vt.max_valence(t);
  }
  const auto bond_fitting = [&](int u, int v) -> int {
    const int room = std::min(free_halves[static_cast<std::size_t>(u)], free_halves[static_cast<std::size_t>(v)]);
    double w[kToyEdgeTypes] = {0.0, 0.0, 0.0, 0.0};
    bool any = false;
    for (int e = 1; e < kToyEdgeTypes; ++e) {
      if (vt.bond_order_halves(e) <= room) {
        w[e] = kBondWeights[e];
        any = true;
      }
    }
    return any ? static_cast<int>(rng.categorical(w)) : kNoEdge;
  };
  const auto bond = [&](int u, int v, int e) {
    g.set_edge(u, v, e);
    free_halves[static_cast<std::size_t>(u)] -= vt.bond_order_halves(e);
    free_halves[static_cast<std::size_t>(v)] -= vt.bond_order_halves(e);
  };
  for (int i = 1; i < n; ++i) {
    std::vector<int> parents;
    for (int p = 0; p < i; ++p)
      if (free_halves[static_cast<std::size_t>(p)] >= 2) parents.push_back(p);
    if (parents.empty() || free_halves[static_cast<std::size_t>(i)] < 2) return Graph();
    const int p = parents[rng.below(parents.size())];
    bond(i, p, bond_fitting(i, p));
  }
  // Ring closures.
  const int closures = n >= 5 ? static_cast<int>(rng.below(3)) : 0;
  for (int c = 0; c < closures; ++c) {
    const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (u == v || g.edge(u, v) != kNoEdge) continue;
    if (free_halves[static_cast<std::size_t>(u)] < 2 || free_halves[static_cast<std::size_t>(v)] < 2) continue;
    bond(u, v, 1);
  }
  return g;
}

}  // namespace

std::vector<Graph> generate_toy_dataset(int count, int max_n, const ValenceTable& vt, std::uint64_t seed) {
  if (count < 0) throw Error(ErrorCode::OutOfRange, "negative dataset size");
  if (max_n < 2 || max_n > 64) throw Error(ErrorCode::OutOfRange, "max_n must be in [2, 64]");
  if (vt.node_types() < 4 || vt.edge_types() < kToyEdgeTypes) {
    throw Error(ErrorCode::UnknownType, "toy molecules need the organic valence table");
  }
  // P(n) grows with n, echoing small-molecule sets dominated by the largest size.
  std::vector<double> size_w(static_cast<std::size_t>(max_n) + 1, 0.0);
  for (int n = 2; n <= max_n; ++n) size_w[static_cast<std::size_t>(n)] = static_cast<double>(n * n);

  std::vector<Graph> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const int n = static_cast<int>(rng.categorical(size_w));
    for (;;) {
      Graph g = propose(n, vt, rng);
      if (g.n() == n && is_connected(g) && is_valid_molecule(g, vt)) {
        out.push_back(std::move(g));
        break;
      }
    }
  }
  return out;
}

}  // namespace backdiff
