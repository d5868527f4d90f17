#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "backdiff/detect.hpp"
#include "backdiff/error.hpp"
#include "backdiff/ged.hpp"
#include "backdiff/io.hpp"
#include "backdiff/metrics.hpp"
#include "backdiff/spectral.hpp"
#include "backdiff/training.hpp"
#include "oracles.hpp"

using namespace backdiff;

namespace {

Graph path(int n) {
  Graph g(n, 4, 4);
  for (int i = 0; i + 1 < n; ++i) g.set_edge(i, i + 1, 1);
  return g;
}

Graph complete(int n) {
  Graph g(n, 4, 4);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.set_edge(i, j, 1);
  return g;
}

// Every labelled graph on n nodes with one node type and d edge types.
std::vector<Graph> all_graphs(int n, int d) {
  std::vector<Graph> out;
  const int pairs = n * (n - 1) / 2;
  int total = 1;
  for (int k = 0; k < pairs; ++k) total *= d;
  for (int code = 0; code < total; ++code) {
    Graph g(n, 1, d);
    int c = code;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        g.set_edge(i, j, c % d);
        c /= d;
      }
    out.push_back(g);
  }
  return out;
}

double e_sum_pow(const Eigen::VectorXd& v, int k) { return v.array().pow(k).sum(); }

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("validity, uniqueness and attack success") {
    const ValenceTable vt = ValenceTable::organic();
    const Graph ok = path(3);
    const std::vector<Graph> copies{ok, ok, ok};
    const EvalReport r = evaluate(copies, vt, EvalMode::Clean);
    CHECK(r.validity == 1.0);
    CHECK(r.uniqueness == doctest::Approx(1.0 / 3));
    CHECK_FALSE(r.asr.has_value());

    const auto hosts = generate_toy_dataset(20, 9, vt, 4);
    const PoisonedCorpus p = poison_corpus(hosts, ExperimentConfig::desk().trigger(vt, 4), 50.0, 3);
    const auto bd = p.backdoored_graphs();
    const EvalReport b = evaluate(bd, vt, EvalMode::Backdoored);
    CHECK(b.validity == 0.0);
    REQUIRE(b.asr.has_value());
    CHECK(*b.asr == 1.0);
    CHECK(b.valid.size() == bd.size());
    CHECK(b.to_json().find("\"schema\": \"backdiff.eval.v1\"") != std::string::npos);
    CHECK_THROWS_AS(evaluate(std::vector<Graph>{}, vt, EvalMode::Clean), Error);
  }

  TEST_CASE("evaluation ignores corpus order") {
    const ValenceTable vt = ValenceTable::organic();
    auto gs = generate_toy_dataset(30, 6, vt, 2);
    gs.push_back(complete(4));
    const EvalReport a = evaluate(gs, vt, EvalMode::Backdoored);
    std::reverse(gs.begin(), gs.end());
    const EvalReport b = evaluate(gs, vt, EvalMode::Backdoored);
    CHECK(a.validity == b.validity);
    CHECK(a.uniqueness == b.uniqueness);
  }
}

TEST_SUITE("ged") {
  TEST_CASE("triangle against a path") {
    const GedResult r = ged(complete(3), path(3));
    CHECK(r.cost == 1.0);
    CHECK(r.normalized == doctest::Approx(1.0 / 3));
    CHECK(r.exact);
    CHECK(ged(path(4), path(4)).cost == 0.0);
  }

  TEST_CASE("exact search matches mapping enumeration for all small pairs") {
    std::vector<Graph> gs;
    for (int n = 1; n <= 4; ++n)
      for (auto& g : all_graphs(n, 2)) gs.push_back(g);
    int mismatches = 0;
    for (const auto& a : gs)
      for (const auto& b : gs)
        if (ged(a, b).cost != oracle::enumerate_ged(a, b)) ++mismatches;
    CHECK(mismatches == 0);

    Rng rng(3);
    for (int k = 0; k < 300; ++k) {
      const Graph a = oracle::random_graph(1 + static_cast<int>(rng.below(4)), 3, 3, 0.5, rng);
      const Graph b = oracle::random_graph(1 + static_cast<int>(rng.below(4)), 3, 3, 0.5, rng);
      CHECK(ged(a, b).cost == oracle::enumerate_ged(a, b));
    }
  }

  TEST_CASE("symmetry and relabelling") {
    Rng rng(5);
    for (int k = 0; k < 40; ++k) {
      const Graph a = oracle::random_graph(3 + static_cast<int>(rng.below(5)), 4, 4, 0.4, rng);
      const Graph b = oracle::random_graph(3 + static_cast<int>(rng.below(5)), 4, 4, 0.4, rng);
      const double d = ged(a, b).cost;
      CHECK(ged(b, a).cost == d);
      CHECK(ged(permute(a, Permutation::random(a.n(), rng.next_u64())), b).cost == d);
      CHECK(ged(a, permute(a, Permutation::random(a.n(), rng.next_u64()))).cost == 0.0);
    }
  }

  TEST_CASE("edit paths and the assignment solver") {
    Eigen::MatrixXd c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    double total = 0.0;
    const auto a = solve_assignment(c, &total);
    CHECK(total == 5.0);
    CHECK(a == std::vector<int>{1, 0, 2});
    // Deleting both nodes of a single edge and inserting a fresh one.
    Graph e(2, 4, 4);
    e.set_edge(0, 1, 1);
    CHECK(edit_path_cost(e, Graph(1, 4, 4), {-1, -1}) == 4.0);
    CHECK(edit_path_cost(e, Graph(1, 4, 4), {0, -1}) == 2.0);
  }

  TEST_CASE("large graphs get the bound, marked inexact") {
    Rng rng(6);
    const Graph a = oracle::random_graph(14, 4, 4, 0.2, rng);
    const Graph b = oracle::random_graph(13, 4, 4, 0.2, rng);
    const GedResult r = ged(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.cost >= 1.0);
  }
}

TEST_SUITE("spectral") {
  TEST_CASE("closed-form normalised Laplacian spectra") {
    const auto k2 = laplacian_spectrum(path(2));
    CHECK(k2[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(k2[1] == doctest::Approx(2.0).epsilon(1e-12));
    const auto p3 = laplacian_spectrum(path(3));
    CHECK(std::abs(p3[0]) < 1e-12);
    CHECK(std::abs(p3[1] - 1.0) < 1e-12);
    CHECK(std::abs(p3[2] - 2.0) < 1e-12);
    const auto k3 = laplacian_spectrum(complete(3));
    CHECK(std::abs(k3[0]) < 1e-12);
    CHECK(std::abs(k3[1] - 1.5) < 1e-12);
    CHECK(std::abs(k3[2] - 1.5) < 1e-12);
  }

  TEST_CASE("Jacobi eigenvalues are roots of the characteristic polynomial") {
    double worst = 0.0;
    for (int n = 1; n <= 4; ++n) {
      for (const auto& g : all_graphs(n, 2)) {
        const Eigen::MatrixXd l = normalized_laplacian(g);
        const auto eig = jacobi_eigen(l);
        const auto c = oracle::charpoly(l);
        // Newton's identities turn the coefficients into power sums, which
        // pin the eigenvalue multiset including multiplicities.
        std::vector<double> e(static_cast<std::size_t>(n) + 1, 0.0), ps(static_cast<std::size_t>(n) + 1, 0.0);
        for (int k = 1; k <= n; ++k) e[k] = (k % 2 ? -1.0 : 1.0) * c[static_cast<std::size_t>(n - k)];
        for (int k = 1; k <= n; ++k) {
          double v = (k % 2 ? 1.0 : -1.0) * k * e[k];
          for (int i = 1; i < k; ++i) v += (i % 2 ? 1.0 : -1.0) * e[i] * ps[static_cast<std::size_t>(k - i)];
          ps[static_cast<std::size_t>(k)] = v;
          worst = std::max(worst, std::abs(e_sum_pow(eig.values, k) - v));
        }
        for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(oracle::poly_eval(c, eig.values[k])));
      }
    }
    CHECK(worst <= 1e-8);
  }

  TEST_CASE("reconstruction of random symmetric matrices") {
    Rng rng(7);
    for (int n = 1; n <= 16; ++n) {
      Eigen::MatrixXd a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = 2.0 * rng.uniform() - 1.0;
      const auto e = jacobi_eigen(a);
      const Eigen::MatrixXd back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
      CHECK((back - a).norm() <= 1e-8);
      CHECK(std::is_sorted(e.values.data(), e.values.data() + n));
    }
  }

  TEST_CASE("nld is a symmetric relabelling-invariant distance") {
    Rng rng(8);
    for (int k = 0; k < 40; ++k) {
      const Graph a = oracle::random_graph(2 + static_cast<int>(rng.below(7)), 4, 4, 0.4, rng);
      const Graph b = oracle::random_graph(2 + static_cast<int>(rng.below(7)), 4, 4, 0.4, rng);
      CHECK(nld(a, a) <= 1e-9);
      CHECK(std::abs(nld(a, b) - nld(b, a)) <= 1e-12);
      CHECK(std::abs(nld(permute(a, Permutation::random(a.n(), rng.next_u64())), b) - nld(a, b)) <= 1e-8);
    }
    // K2 vs P3: spectra {0, 0, 2} (padded) and {0, 1, 2}.
    CHECK(nld(path(2), path(3)) == doctest::Approx(1.0 / std::sqrt(3.0)));
  }
}

TEST_SUITE("detect") {
  TEST_CASE("calibration, self-reference and one-node flips") {
    const ValenceTable vt = ValenceTable::organic();
    const auto reference = generate_toy_dataset(150, 7, vt, 12);
    DetectOptions opt;
    opt.quantile = 0.01;
    const DetectionReport self = detect(reference, reference, opt);
    const auto rate = [](const DetectionReport& r) {
      return static_cast<double>(std::count(r.flagged.begin(), r.flagged.end(), true)) /
             static_cast<double>(r.flagged.size());
    };
    CHECK(rate(self) <= 0.02);

    std::vector<Graph> flipped = reference;
    Rng rng(3);
    for (auto& g : flipped) {
      const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.n())));
      g.set_node(i, (g.node(i) + 1 + static_cast<int>(rng.below(3))) % 4);
    }
    const DetectionReport f = detect(flipped, reference, opt);
    CHECK(rate(f) < 0.5);
    CHECK(detect(std::vector<Graph>{}, reference, opt).flagged.empty());
    CHECK(f.to_json().find("\"schema\": \"backdiff.detect.v1\"") != std::string::npos);
  }

  TEST_CASE("missing sizes fall back to the nearest one") {
    const std::vector<Graph> reference{path(3), complete(3), path(5), path(5)};
    const DetectionReport r = detect(std::vector<Graph>{path(4)}, reference);
    REQUIRE(r.scores.size() == 1);
    CHECK(r.warnings.size() == 1);
    CHECK(r.scores[0] > 0.0);
    CHECK_THROWS_AS(detect(reference, std::vector<Graph>{}), Error);
  }

  TEST_CASE("pairwise similarity report") {
    const std::vector<Graph> a{complete(3), path(4)};
    const std::vector<Graph> b{path(3), path(4)};
    const SimilarityReport r = compare_pairs(a, b);
    CHECK(r.pairs[0].ged == doctest::Approx(1.0 / 3));
    CHECK(r.pairs[1].ged == 0.0);
    CHECK(r.ged == doctest::Approx(1.0 / 6));
    CHECK(similarity_from_ged(0.0) == 1.0);
  }
}
