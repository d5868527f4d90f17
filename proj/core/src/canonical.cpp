#include "backdiff/canonical.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

namespace backdiff {

std::vector<std::uint8_t> encode_in_order(const Graph& g, const std::vector<int>& order) {
  const int n = g.n();
  std::vector<std::uint8_t> code;
  code.reserve(1 + static_cast<std::size_t>(n) + static_cast<std::size_t>(n) * (n - 1) / 2);
  code.push_back(static_cast<std::uint8_t>(n));
  for (int k = 0; k < n; ++k) code.push_back(static_cast<std::uint8_t>(g.node(order[static_cast<std::size_t>(k)])));
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l)
      code.push_back(static_cast<std::uint8_t>(g.edge(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(l)])));
  return code;
}

namespace {

constexpr int kExhaustiveLimit = 8;

std::vector<int> exhaustive_order(const Graph& g) {
  const int n = g.n();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return g.node(x) < g.node(y); });

  // Cells of equal node type; permute within each cell like an odometer.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s;
    while (e < order.size() && g.node(order[e]) == g.node(order[s])) ++e;
    cells.emplace_back(s, e);
    s = e;
  }

  std::vector<int> best = order;
  std::vector<std::uint8_t> best_code = encode_in_order(g, order);
  while (true) {
    std::size_t c = 0;
    for (; c < cells.size(); ++c) {
      auto first = order.begin() + static_cast<std::ptrdiff_t>(cells[c].first);
      auto last = order.begin() + static_cast<std::ptrdiff_t>(cells[c].second);
      if (std::next_permutation(first, last)) break;  // wrapped cells are back to sorted
    }
    if (c == cells.size()) break;
    auto code = encode_in_order(g, order);
    if (code < best_code) {
      best_code = std::move(code);
      best = order;
    }
  }
  return best;
}

// Colour refinement to a stable partition; colours are dense ranks whose
// order depends only on the isomorphism class of (g, input colouring).
std::vector<int> refine(const Graph& g, std::vector<int> color) {
  const int n = g.n();
  using Signature = std::pair<int, std::vector<std::pair<int, int>>>;
  int classes = static_cast<int>(std::set<int>(color.begin(), color.end()).size());
  while (true) {
    std::vector<Signature> sig(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& s = sig[static_cast<std::size_t>(i)];
      s.first = color[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j)
        if (j != i && g.edge(i, j) != kNoEdge) s.second.emplace_back(g.edge(i, j), color[static_cast<std::size_t>(j)]);
      std::sort(s.second.begin(), s.second.end());
    }
    std::vector<Signature> distinct = sig;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (int i = 0; i < n; ++i) {
      color[static_cast<std::size_t>(i)] = static_cast<int>(
          std::lower_bound(distinct.begin(), distinct.end(), sig[static_cast<std::size_t>(i)]) - distinct.begin());
    }
    const int next = static_cast<int>(distinct.size());
    if (next == classes) return color;
    classes = next;
  }
}

void individualize_search(const Graph& g, const std::vector<int>& color, std::vector<int>& best,
                          std::vector<std::uint8_t>& best_code) {
  const int n = g.n();
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (int c : color) ++count[static_cast<std::size_t>(c)];
  int target = -1;
  for (int c = 0; c < n; ++c)
    if (count[static_cast<std::size_t>(c)] > 1) {
      target = c;
      break;
    }
  if (target < 0) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(color[static_cast<std::size_t>(i)])] = i;
    auto code = encode_in_order(g, order);
    if (best_code.empty() || code < best_code) {
      best_code = std::move(code);
      best = std::move(order);
    }
    return;
  }
  for (int v = 0; v < n; ++v) {
    if (color[static_cast<std::size_t>(v)] != target) continue;
    // v keeps colour `target`; its cell-mates move just after it.
    std::vector<int> split(color.size());
    for (int i = 0; i < n; ++i) {
      const int c = color[static_cast<std::size_t>(i)];
      split[static_cast<std::size_t>(i)] = 2 * c + ((c == target && i != v) ? 1 : 0);
    }
    individualize_search(g, refine(g, std::move(split)), best, best_code);
  }
}

std::vector<int> refined_order(const Graph& g) {
  std::vector<int> color(static_cast<std::size_t>(g.n()));
  for (int i = 0; i < g.n(); ++i) color[static_cast<std::size_t>(i)] = g.node(i);
  std::vector<int> best;
  std::vector<std::uint8_t> best_code;
  individualize_search(g, refine(g, std::move(color)), best, best_code);
  return best;
}

}  // namespace

std::vector<int> canonical_order(const Graph& g) {
  return g.n() <= kExhaustiveLimit ? exhaustive_order(g) : refined_order(g);
}

std::vector<std::uint8_t> canonical_encoding(const Graph& g) { return encode_in_order(g, canonical_order(g)); }

std::uint64_t canonical_hash(const Graph& g) {
  // FNV-1a over the type counts and the canonical encoding.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  feed(static_cast<std::uint8_t>(g.node_types()));
  feed(static_cast<std::uint8_t>(g.edge_types()));
  for (std::uint8_t b : canonical_encoding(g)) feed(b);
  return h;
}

}  // namespace backdiff
