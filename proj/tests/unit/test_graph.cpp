#include <doctest.h>

#include "backdiff/canonical.hpp"
#include "backdiff/error.hpp"
#include "backdiff/graph.hpp"
#include "backdiff/trigger.hpp"
#include "backdiff/valence.hpp"
#include "oracles.hpp"

using namespace backdiff;

namespace {

Graph triangle(int type = 0) {
  Graph g(3, 4, 4);
  for (int i = 0; i < 3; ++i) g.set_node(i, type);
  g.set_edge(0, 1, 1);
  g.set_edge(1, 2, 1);
  g.set_edge(0, 2, 1);
  return g;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("edges are symmetric and the diagonal is no-edge") {
    Graph g(4, 3, 3);
    g.set_edge(0, 2, 2);
    CHECK(g.edge(2, 0) == 2);
    CHECK(g.edge_count() == 1);
    CHECK_THROWS_AS(g.set_edge(1, 1, 1), Error);
    CHECK_NOTHROW(g.set_edge(1, 1, 0));
    CHECK_THROWS_AS(g.set_node(0, 3), Error);
    CHECK_THROWS_AS(g.set_edge(0, 1, 3), Error);
  }

  TEST_CASE("one-hot encodings") {
    const Graph g = triangle(2);
    const auto x = g.node_one_hot();
    CHECK(x.rows() == 3);
    CHECK(x(1, 2) == 1.0);
    CHECK(x.row(0).sum() == 1.0);
    const auto e = g.edge_one_hot();
    CHECK(e.rows() == 9);
    CHECK(e(pair_index(1, 1, 3), 0) == 1.0);
    CHECK(e(pair_index(0, 2, 3), 1) == 1.0);
    SoftGraph s = SoftGraph::from_graph(g);
    CHECK(s.is_valid());
    s.pe(pair_index(0, 1, 3), 1) = 0.5;
    CHECK_FALSE(s.is_valid());
  }

  TEST_CASE("permutation moves node i to pi(i)") {
    Graph g(3, 3, 2);
    g.set_node(0, 1);
    g.set_edge(0, 1, 1);
    const Permutation pi({2, 0, 1});
    const Graph h = permute(g, pi);
    CHECK(h.node(2) == 1);
    CHECK(h.edge(2, 0) == 1);
    CHECK(permute(h, pi.inverse()) == g);
    CHECK_THROWS_AS(Permutation({0, 0, 1}), Error);
  }

  TEST_CASE("soft permutation matches hard permutation") {
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
      const Graph g = oracle::random_graph(5, 3, 3, 0.4, rng);
      const auto pi = Permutation::random(5, rng.next_u64());
      const SoftGraph a = permute(SoftGraph::from_graph(g), pi);
      const SoftGraph b = SoftGraph::from_graph(permute(g, pi));
      CHECK(a.px == b.px);
      CHECK(a.pe == b.pe);
    }
  }
}

TEST_SUITE("valence") {
  TEST_CASE("organic table") {
    const auto vt = ValenceTable::organic();
    CHECK(vt.node_index("O") == 2);
    CHECK(vt.max_valence(vt.node_index("C")) == 4);
    CHECK(vt.bond_order(4) == 1.5);
  }

  TEST_CASE("triple-bonded oxygen chain is invalid") {
    const auto vt = ValenceTable::organic();
    const auto spec = TriggerSpec::chain3(4, 4, 2, 3, 3);
    CHECK_FALSE(is_valid_molecule(spec.fragment, vt));
    Graph co(2, 4, 4);
    co.set_node(1, 2);
    co.set_edge(0, 1, 2);
    CHECK(is_valid_molecule(co, vt));
    co.set_edge(0, 1, 3);
    CHECK_FALSE(is_valid_molecule(co, vt));
  }

  TEST_CASE("aromatic half orders add exactly") {
    const auto vt = ValenceTable::organic();
    // Carbon with two aromatic bonds and one single: 1.5 + 1.5 + 1 = 4.
    Graph g(4, 4, 5);
    g.set_edge(0, 1, 4);
    g.set_edge(0, 2, 4);
    g.set_edge(0, 3, 1);
    CHECK(bond_order_sum_halves(g, vt, 0) == 8);
    CHECK(is_valid_molecule(g, vt));
    Graph bad(2, 5, 4);
    bad.set_node(0, 4);
    CHECK_THROWS_AS(is_valid_molecule(bad, vt), Error);
  }
}

TEST_SUITE("trigger") {
  TEST_CASE("injection overwrites n_s nodes and adds k connectors") {
    const auto spec = TriggerSpec::chain3(4, 4, 2, 3, 3);
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
      const int n = 4 + static_cast<int>(rng.below(6));
      const Graph host = oracle::random_graph(n, 4, 4, 0.3, rng);
      const auto inj = inject_trigger(host, spec, rng.next_u64());
      const auto& set = inj.masks.node_set();
      REQUIRE(set.size() == 3);
      CHECK(std::is_sorted(set.begin(), set.end()));
      for (int s = 0; s < 3; ++s) {
        CHECK(inj.graph.node(set[static_cast<std::size_t>(s)]) == 2);
        for (int r = 0; r < 3; ++r) {
          CHECK(inj.graph.edge(set[static_cast<std::size_t>(s)], set[static_cast<std::size_t>(r)]) ==
                spec.fragment.edge(s, r));
        }
      }
      REQUIRE(inj.connectors.size() == 3);
      const auto is_connector = [&](int i, int j) {
        for (const auto& [s, h] : inj.connectors)
          if ((s == i && h == j) || (s == j && h == i)) return true;
        return false;
      };
      for (const auto& [s, h] : inj.connectors) {
        CHECK(inj.masks.node(s));
        CHECK(!inj.masks.node(h));
      }
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const bool ti = inj.masks.node(i);
          const bool tj = inj.masks.node(j);
          if (is_connector(i, j)) {
            CHECK(inj.graph.edge(i, j) == spec.connector_type);
          } else if (!(ti && tj)) {
            CHECK(inj.graph.edge(i, j) == host.edge(i, j));
          }
          CHECK(inj.masks.edge(i, j) == (ti && tj));
        }
      }
    }
  }

  TEST_CASE("injection is deterministic and rejects small hosts") {
    const auto spec = TriggerSpec::chain3(4, 4, 2, 3, 3);
    Rng rng(3);
    const Graph host = oracle::random_graph(7, 4, 4, 0.3, rng);
    CHECK(inject_trigger(host, spec, 9).graph == inject_trigger(host, spec, 9).graph);
    CHECK_THROWS_AS(inject_trigger(Graph(2, 4, 4), spec, 1), Error);
    // 3 trigger nodes and 1 host node allow at most 3 connectors.
    CHECK_NOTHROW(inject_trigger(Graph(4, 4, 4), spec, 1));
    const auto wide = TriggerSpec::chain3(4, 4, 2, 3, 4);
    try {
      inject_trigger(Graph(4, 4, 4), wide, 1);
      FAIL("expected HostTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::HostTooSmall);
    }
  }

  TEST_CASE("empty trigger is the identity") {
    TriggerSpec empty;
    empty.fragment = Graph(0, 4, 4);
    empty.connector_edges = 0;
    Rng rng(1);
    const Graph host = oracle::random_graph(5, 4, 4, 0.5, rng);
    CHECK(inject_trigger(host, empty, 3).graph == host);
  }
}

TEST_SUITE("canonical") {
  TEST_CASE("hash equality coincides with brute-force isomorphism on 6-node pairs") {
    Rng rng(21);
    int iso = 0;
    for (int k = 0; k < 300; ++k) {
      const Graph a = oracle::random_graph(6, 2, 2, 0.4, rng);
      // Half the pairs are relabelled copies, so both outcomes are exercised.
      const Graph b = (k % 2 == 0) ? permute(a, Permutation::random(6, rng.next_u64()))
                                   : oracle::random_graph(6, 2, 2, 0.4, rng);
      const bool brute = oracle::isomorphic(a, b);
      iso += brute ? 1 : 0;
      CHECK((canonical_hash(a) == canonical_hash(b)) == brute);
    }
    CHECK(iso >= 150);
  }

  TEST_CASE("larger graphs hash invariantly under relabelling") {
    Rng rng(8);
    for (int k = 0; k < 40; ++k) {
      const int n = 9 + static_cast<int>(rng.below(6));
      const Graph a = oracle::random_graph(n, 3, 3, 0.3, rng);
      const Graph b = permute(a, Permutation::random(n, rng.next_u64()));
      CHECK(canonical_encoding(a) == canonical_encoding(b));
    }
  }

  TEST_CASE("regular graphs need individualisation") {
    // Two 2-regular graphs on 10 nodes: a 10-cycle and two 5-cycles.
    Graph c10(10, 1, 2), c55(10, 1, 2);
    for (int i = 0; i < 10; ++i) c10.set_edge(i, (i + 1) % 10, 1);
    for (int i = 0; i < 5; ++i) {
      c55.set_edge(i, (i + 1) % 5, 1);
      c55.set_edge(5 + i, 5 + (i + 1) % 5, 1);
    }
    CHECK(canonical_hash(c10) != canonical_hash(c55));
    CHECK(canonical_hash(c10) == canonical_hash(permute(c10, Permutation::random(10, 4))));
  }
}
