#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "backdiff/graph.hpp"

namespace backdiff {

// The subgraph trigger and how it is attached to a host graph.
struct TriggerSpec {
  Graph fragment;           // n_s nodes; its edge tensor is the trigger's internal bonds
  int connector_edges = 3;  // trigger-to-host attachment edges
  int connector_type = 1;   // single bond

  int size() const noexcept { return fragment.n(); }
  void validate() const;

  // Three atoms of `atom_type` chained by two bonds of `bond_type`
  // (O#O#O with the organic table).
  static TriggerSpec chain3(int node_types, int edge_types, int atom_type, int bond_type,
                            int connectors, int connector_type = 1);
};

// Host positions occupied by the trigger.
//
// Trigger node k sits at host position node_set[k]; node_set is sorted.
// An edge (i,j) is masked iff both endpoints are trigger positions, so
// connector edges are never masked.
class TriggerMasks {
 public:
  TriggerMasks() = default;
  TriggerMasks(int n, std::vector<int> node_set);

  static TriggerMasks none(int n) { return TriggerMasks(n, {}); }

  int n() const noexcept { return n_; }
  const std::vector<int>& node_set() const noexcept { return node_set_; }
  bool empty() const noexcept { return node_set_.empty(); }

  bool node(int i) const { return slot_[static_cast<std::size_t>(i)] >= 0; }
  bool edge(int i, int j) const { return node(i) && node(j); }
  // Index into the trigger fragment, -1 for unmasked positions.
  int slot(int i) const { return slot_[static_cast<std::size_t>(i)]; }

  friend bool operator==(const TriggerMasks&, const TriggerMasks&) = default;

 private:
  int n_ = 0;
  std::vector<int> node_set_;
  std::vector<int> slot_;
};

struct InjectionResult {
  Graph graph;
  TriggerMasks masks;
  std::vector<std::pair<int, int>> connectors;  // (trigger position, host position)
};

// Overwrites n_s uniformly chosen host nodes with the trigger fragment and
// adds exactly connector_edges attachment edges. Throws HostTooSmall when the
// host cannot take the trigger and all its connectors.
InjectionResult inject_trigger(const Graph& g, const TriggerSpec& spec, std::uint64_t seed);

// Pins masked rows of a soft graph to the trigger one-hots.
SoftGraph apply_masked_overwrite(const SoftGraph& soft, const TriggerSpec& spec, const TriggerMasks& masks);
// Same, for hard graphs.
Graph apply_masked_overwrite(const Graph& g, const TriggerSpec& spec, const TriggerMasks& masks);

}  // namespace backdiff
