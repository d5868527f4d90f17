#include <benchmark/benchmark.h>

#include <vector>

#include "backdiff/canonical.hpp"
#include "backdiff/config.hpp"
#include "backdiff/denoiser.hpp"
#include "backdiff/diffusion.hpp"
#include "backdiff/ged.hpp"
#include "backdiff/io.hpp"
#include "backdiff/spectral.hpp"

using namespace backdiff;

namespace {

const std::vector<Graph>& corpus() {
  static const std::vector<Graph> g = generate_toy_dataset(64, 9, ValenceTable::organic(), 5);
  return g;
}

DenoiserModel desk_model() {
  const ExperimentConfig cfg = ExperimentConfig::desk();
  return init_model(cfg.model_dims(ValenceTable::organic(), 4), 1);
}

void BM_DenoiserForward(benchmark::State& state) {
  const DenoiserModel model = desk_model();
  const Graph& g = corpus()[0];
  for (auto _ : state) benchmark::DoNotOptimize(denoiser_forward(model, g, 25, 50));
}
BENCHMARK(BM_DenoiserForward);

void BM_LossAndGradients(benchmark::State& state) {
  const DenoiserModel model = desk_model();
  const Graph& g = corpus()[0];
  Gradients grads = model.zero_gradients();
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(model, g, g, 25, 50, grads));
}
BENCHMARK(BM_LossAndGradients);

void BM_Ged(benchmark::State& state) {
  const auto& c = corpus();
  GedOptions opt;
  opt.exact_limit = static_cast<int>(state.range(0));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ged(c[k % c.size()], c[(k + 1) % c.size()], opt));
    ++k;
  }
}
BENCHMARK(BM_Ged)->Arg(0)->Arg(12);

void BM_Jacobi(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, n);
  a = (a + a.transpose()).eval();
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(a));
}
BENCHMARK(BM_Jacobi)->Arg(9)->Arg(32);

void BM_CanonicalHash(benchmark::State& state) {
  const auto& c = corpus();
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(canonical_hash(c[k++ % c.size()]));
}
BENCHMARK(BM_CanonicalHash);

}  // namespace

BENCHMARK_MAIN();
