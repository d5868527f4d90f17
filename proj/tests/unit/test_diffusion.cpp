#include <cmath>
#include <numbers>

#include <doctest.h>

#include "backdiff/diffusion.hpp"
#include "backdiff/error.hpp"
#include "backdiff/schedule.hpp"
#include "backdiff/trigger.hpp"
#include "oracles.hpp"

using namespace backdiff;

namespace {

LimitDistributions random_limits(int a, int d, Rng& rng) {
  LimitDistributions lim;
  lim.node = oracle::random_distribution(a, rng);
  lim.edge = oracle::random_distribution(d, rng);
  lim.node_backdoored = oracle::random_distribution(a, rng);
  lim.edge_backdoored = oracle::random_distribution(d, rng);
  return lim;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("cosine schedule follows the squared-cosine curve") {
    const int T = 50;
    const auto s = cosine_schedule(T);
    const auto f = [&](int t) {
      const double c = std::cos((t / double(T) + 0.008) / 1.008 * std::numbers::pi / 2.0);
      return c * c;
    };
    for (int t = 1; t < T; ++t) CHECK(s.alpha_bar(t) == doctest::Approx(f(t) / f(0)).epsilon(1e-12));
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.alpha(T) == 1e-4);  // clipped
    for (int t = 2; t <= T; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }

  TEST_CASE("linear schedule is decreasing in alpha") {
    const auto s = linear_schedule(100);
    CHECK(s.alpha(1) == doctest::Approx(1.0 - 1e-3));
    for (int t = 2; t <= 100; ++t) CHECK(s.alpha(t) < s.alpha(t - 1));
    CHECK_THROWS_AS(cosine_schedule(1), Error);
  }

  TEST_CASE("cumulative matrix equals the naive product") {
    Rng rng(1);
    for (int k = 0; k < 30; ++k) {
      const int T = 1 + static_cast<int>(rng.below(64));
      const int c = 2 + static_cast<int>(rng.below(5));
      const auto alphas = oracle::random_alphas(T, rng);
      const NoiseSchedule sched(alphas);
      const auto m = oracle::random_distribution(c, rng);
      for (int t = 0; t <= T; ++t) {
        const double err = (cumulative_matrix(sched, t, m) - oracle::naive_cumulative(alphas, t, m)).cwiseAbs().maxCoeff();
        CHECK(err <= 1e-10);
      }
    }
  }

  TEST_CASE("transition matrices are row-stochastic") {
    Rng rng(2);
    const auto m = oracle::random_distribution(4, rng);
    const auto q = step_matrix(0.3, m);
    for (int i = 0; i < 4; ++i) CHECK(q.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(step_matrix(0.3, Eigen::VectorXd::Constant(3, 0.5)), Error);
  }

  TEST_CASE("marginals count nodes and unordered pairs") {
    // Path 0-1-2 of types {0, 1, 0}: 3 pairs, 2 single bonds.
    Graph g(3, 2, 2);
    g.set_node(1, 1);
    g.set_edge(0, 1, 1);
    g.set_edge(1, 2, 1);
    const std::vector<Graph> gs{g};
    const auto mx = node_marginal(gs);
    const auto me = edge_marginal(gs);
    CHECK(mx[0] == doctest::Approx(2.0 / 3));
    CHECK(me[0] == doctest::Approx(1.0 / 3));
    CHECK(me[1] == doctest::Approx(2.0 / 3));
  }

  TEST_CASE("backdoored limits mix clean and backdoored marginals") {
    Rng rng(4);
    std::vector<Graph> clean, bd;
    for (int k = 0; k < 10; ++k) clean.push_back(oracle::random_graph(5, 3, 3, 0.3, rng));
    for (int k = 0; k < 4; ++k) bd.push_back(oracle::random_graph(6, 3, 3, 0.6, rng));
    const auto lim = estimate_limits(clean, bd, 0.25);
    const Eigen::VectorXd want = 0.75 * node_marginal(clean) + 0.25 * node_marginal(bd);
    CHECK((lim.node_backdoored - want).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(estimate_limits({}, bd, 0.5), Error);
  }
}

TEST_SUITE("diffusion") {
  TEST_CASE("forward marginal equals step-by-step propagation") {
    Rng rng(5);
    const auto alphas = oracle::random_alphas(6, rng);
    const NoiseSchedule sched(alphas);
    const auto lim = random_limits(3, 3, rng);
    const Graph g = oracle::random_graph(4, 3, 3, 0.5, rng);
    for (int t = 1; t <= 6; ++t) {
      const SoftGraph s = forward_marginal_clean(g, sched, lim, t);
      CHECK(s.is_valid(1e-12));
      for (int i = 0; i < 4; ++i)
        CHECK((s.px.row(i).transpose() - oracle::propagate(alphas, lim.node, g.node(i), t)).norm() < 1e-12);
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          CHECK((s.pe.row(pair_index(i, j, 4)).transpose() - oracle::propagate(alphas, lim.edge, g.edge(i, j), t))
                    .norm() < 1e-12);
    }
  }

  TEST_CASE("backdoored marginal pins masked rows and diffuses the rest under the backdoored limits") {
    Rng rng(6);
    const auto alphas = oracle::random_alphas(5, rng);
    const NoiseSchedule sched(alphas);
    const auto lim = random_limits(4, 4, rng);
    const auto spec = TriggerSpec::chain3(4, 4, 2, 3, 2);
    const auto inj = inject_trigger(oracle::random_graph(6, 4, 4, 0.4, rng), spec, 3);
    const SoftGraph s = forward_marginal_backdoored(inj.graph, inj.masks, spec, sched, lim, 5);
    CHECK(s.is_valid(1e-12));
    for (int i = 0; i < 6; ++i) {
      if (inj.masks.node(i)) {
        CHECK(s.px(i, 2) == 1.0);
      } else {
        CHECK((s.px.row(i).transpose() - oracle::propagate(alphas, lim.node_backdoored, inj.graph.node(i), 5)).norm() <
              1e-12);
      }
      for (int j = i + 1; j < 6; ++j) {
        const auto row = s.pe.row(pair_index(i, j, 6)).transpose();
        if (inj.masks.edge(i, j)) {
          CHECK(row[inj.graph.edge(i, j)] == 1.0);
        } else {
          CHECK((row - oracle::propagate(alphas, lim.edge_backdoored, inj.graph.edge(i, j), 5)).norm() < 1e-12);
        }
      }
    }
  }

  TEST_CASE("clean posterior matches trajectory enumeration") {
    Rng rng(7);
    for (int c = 2; c <= 3; ++c) {
      for (int T = 1; T <= 4; ++T) {
        const auto alphas = oracle::random_alphas(T, rng);
        const NoiseSchedule sched(alphas);
        const auto lim = random_limits(c, c, rng);
        const Graph g = oracle::random_graph(3, c, c, 0.5, rng);
        for (int t = 1; t <= T; ++t) {
          const Graph gt = oracle::random_graph(3, c, c, 0.5, rng);
          const SoftGraph post = true_posterior_clean(g, gt, sched, lim, t);
          for (int i = 0; i < 3; ++i) {
            const auto want = oracle::enumerate_posterior(alphas, lim.node, g.node(i), gt.node(i), t);
            CHECK((post.px.row(i).transpose() - want).cwiseAbs().maxCoeff() <= 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("backdoored posterior matches enumeration off the trigger and is one-hot on it") {
    Rng rng(8);
    for (int T = 1; T <= 4; ++T) {
      const auto alphas = oracle::random_alphas(T, rng);
      const NoiseSchedule sched(alphas);
      const auto lim = random_limits(3, 3, rng);
      const auto spec = TriggerSpec::chain3(3, 3, 2, 2, 1);
      const auto inj = inject_trigger(oracle::random_graph(5, 3, 3, 0.4, rng), spec, rng.next_u64());
      for (int t = 1; t <= T; ++t) {
        const Graph gt =
            apply_masked_overwrite(oracle::random_graph(5, 3, 3, 0.5, rng), spec, inj.masks);
        const SoftGraph post = true_posterior_backdoored(inj.graph, gt, inj.masks, spec, sched, lim, t);
        for (int i = 0; i < 5; ++i) {
          if (inj.masks.node(i)) {
            CHECK(post.px(i, 2) == 1.0);
            continue;
          }
          const auto want = oracle::enumerate_posterior(alphas, lim.node_backdoored, inj.graph.node(i), gt.node(i), t);
          CHECK((post.px.row(i).transpose() - want).cwiseAbs().maxCoeff() <= 1e-12);
          for (int j = i + 1; j < 5; ++j) {
            const auto we =
                oracle::enumerate_posterior(alphas, lim.edge_backdoored, inj.graph.edge(i, j), gt.edge(i, j), t);
            CHECK((post.pe.row(pair_index(i, j, 5)).transpose() - we).cwiseAbs().maxCoeff() <= 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("noisy samples copy masked coordinates") {
    Rng rng(9);
    const NoiseSchedule sched = cosine_schedule(10);
    const auto lim = random_limits(4, 4, rng);
    const auto spec = TriggerSpec::chain3(4, 4, 2, 3, 3);
    const auto inj = inject_trigger(oracle::random_graph(8, 4, 4, 0.3, rng), spec, 1);
    for (int k = 0; k < 50; ++k) {
      const SoftGraph s = forward_marginal_backdoored(inj.graph, inj.masks, spec, sched, lim, 10);
      const Graph gt = sample_noisy(s, &inj.masks, rng.next_u64());
      CHECK(apply_masked_overwrite(gt, spec, inj.masks) == gt);
    }
  }

  TEST_CASE("sample_noisy frequencies follow the soft rows") {
    SoftGraph s(2, 3, 2);
    s.px.row(0) << 0.2, 0.3, 0.5;
    s.px.row(1) << 1.0, 0.0, 0.0;
    s.pe.setZero();
    s.pe(0, 0) = s.pe(3, 0) = 1.0;
    s.pe(1, 0) = s.pe(2, 0) = 0.7;
    s.pe(1, 1) = s.pe(2, 1) = 0.3;
    int counts[3] = {0, 0, 0};
    int edges = 0;
    const int N = 20000;
    for (int k = 0; k < N; ++k) {
      const Graph g = sample_noisy(s, nullptr, static_cast<std::uint64_t>(k));
      ++counts[g.node(0)];
      edges += g.edge(0, 1);
    }
    CHECK(counts[2] / double(N) == doctest::Approx(0.5).epsilon(0.03));
    CHECK(edges / double(N) == doctest::Approx(0.3).epsilon(0.05));
  }

  TEST_CASE("bad timesteps are rejected") {
    Rng rng(1);
    const auto lim = random_limits(2, 2, rng);
    const Graph g(2, 2, 2);
    CHECK_THROWS_AS(true_posterior_clean(g, g, cosine_schedule(5), lim, 0), Error);
    CHECK_THROWS_AS(forward_marginal_clean(g, cosine_schedule(5), lim, 6), Error);
  }
}
