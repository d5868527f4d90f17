#include "backdiff/trigger.hpp"

#include <algorithm>
#include <numeric>

#include "backdiff/error.hpp"
#include "backdiff/rng.hpp"

namespace backdiff {

void TriggerSpec::validate() const {
  try {
    fragment.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidTrigger, e.what());
  }
  if (size() > 0 && connector_edges < 1) throw Error(ErrorCode::InvalidTrigger, "connector count must be >= 1");
  if (connector_type <= kNoEdge || connector_type >= fragment.edge_types()) {
    throw Error(ErrorCode::InvalidTrigger, "connector type " + std::to_string(connector_type));
  }
}

TriggerSpec TriggerSpec::chain3(int node_types, int edge_types, int atom_type, int bond_type,
                                int connectors, int connector_type) {
  TriggerSpec spec;
  spec.fragment = Graph(3, node_types, edge_types);
  for (int k = 0; k < 3; ++k) spec.fragment.set_node(k, atom_type);
  spec.fragment.set_edge(0, 1, bond_type);
  spec.fragment.set_edge(1, 2, bond_type);
  spec.connector_edges = connectors;
  spec.connector_type = connector_type;
  spec.validate();
  return spec;
}

TriggerMasks::TriggerMasks(int n, std::vector<int> node_set) : n_(n), node_set_(std::move(node_set)) {
  std::sort(node_set_.begin(), node_set_.end());
  slot_.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < node_set_.size(); ++k) {
    const int pos = node_set_[k];
    if (pos < 0 || pos >= n || slot_[static_cast<std::size_t>(pos)] >= 0) {
      throw Error(ErrorCode::DimensionMismatch, "trigger position " + std::to_string(pos));
    }
    slot_[static_cast<std::size_t>(pos)] = static_cast<int>(k);
  }
}

namespace {

void check_compatible(int n, int a, int d, const TriggerSpec& spec, const TriggerMasks& masks) {
  if (masks.n() != n) throw Error(ErrorCode::DimensionMismatch, "mask size differs from graph size");
  if (!masks.empty() && static_cast<int>(masks.node_set().size()) != spec.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mask does not cover the trigger");
  }
  if (!masks.empty() && (spec.fragment.node_types() != a || spec.fragment.edge_types() != d)) {
    throw Error(ErrorCode::DimensionMismatch, "trigger type counts differ from graph");
  }
}

}  // namespace

InjectionResult inject_trigger(const Graph& g, const TriggerSpec& spec, std::uint64_t seed) {
  const int n = g.n();
  const int ns = spec.size();
  if (ns == 0) return {g, TriggerMasks::none(n), {}};
  spec.validate();
  if (spec.fragment.node_types() != g.node_types() || spec.fragment.edge_types() != g.edge_types()) {
    throw Error(ErrorCode::InvalidTrigger, "trigger type counts differ from host");
  }
  if (n < ns) {
    throw Error(ErrorCode::HostTooSmall, "host has " + std::to_string(n) + " nodes, trigger needs " +
                                             std::to_string(ns));
  }
  const long available = static_cast<long>(ns) * (n - ns);
  if (available < spec.connector_edges) {
    throw Error(ErrorCode::HostTooSmall, "host of size " + std::to_string(n) + " cannot take " +
                                             std::to_string(spec.connector_edges) + " connector edges");
  }

  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int k = 0; k < ns; ++k) {
    const auto j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(j)]);
  }
  TriggerMasks masks(n, std::vector<int>(order.begin(), order.begin() + ns));

  Graph out = apply_masked_overwrite(g, spec, masks);

  // Candidate (trigger, host) pairs enumerated in a fixed order, then a
  // partial shuffle picks the connectors.
  std::vector<std::pair<int, int>> candidates;
  candidates.reserve(static_cast<std::size_t>(available));
  for (int tpos : masks.node_set())
    for (int h = 0; h < n; ++h)
      if (!masks.node(h)) candidates.emplace_back(tpos, h);
  std::vector<std::pair<int, int>> chosen;
  for (int k = 0; k < spec.connector_edges; ++k) {
    const auto j = static_cast<std::size_t>(k) +
                   static_cast<std::size_t>(rng.below(candidates.size() - static_cast<std::size_t>(k)));
    std::swap(candidates[static_cast<std::size_t>(k)], candidates[j]);
    chosen.push_back(candidates[static_cast<std::size_t>(k)]);
    out.set_edge(chosen.back().first, chosen.back().second, spec.connector_type);
  }
  return {std::move(out), std::move(masks), std::move(chosen)};
}

SoftGraph apply_masked_overwrite(const SoftGraph& soft, const TriggerSpec& spec, const TriggerMasks& masks) {
  check_compatible(soft.n, soft.node_types(), soft.edge_types(), spec, masks);
  SoftGraph out = soft;
  for (int i : masks.node_set()) {
    out.px.row(i).setZero();
    out.px(i, spec.fragment.node(masks.slot(i))) = 1.0;
    for (int j : masks.node_set()) {
      const auto ij = static_cast<Eigen::Index>(pair_index(i, j, soft.n));
      out.pe.row(ij).setZero();
      out.pe(ij, spec.fragment.edge(masks.slot(i), masks.slot(j))) = 1.0;
    }
  }
  return out;
}

Graph apply_masked_overwrite(const Graph& g, const TriggerSpec& spec, const TriggerMasks& masks) {
  check_compatible(g.n(), g.node_types(), g.edge_types(), spec, masks);
  Graph out = g;
  for (int i : masks.node_set()) {
    out.set_node(i, spec.fragment.node(masks.slot(i)));
    for (int j : masks.node_set())
      if (i < j) out.set_edge(i, j, spec.fragment.edge(masks.slot(i), masks.slot(j)));
  }
  return out;
}

}  // namespace backdiff
