#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "backdiff/denoiser.hpp"
#include "backdiff/diffusion.hpp"
#include "backdiff/rng.hpp"
#include "backdiff/schedule.hpp"

namespace backdiff {

// Empirical histogram of graph sizes.
struct SizeDistribution {
  std::vector<double> probability;  // indexed by n

  static SizeDistribution from_graphs(std::span<const Graph> graphs);
  static SizeDistribution single(int n);
  void validate() const;
  int sample(Rng& rng) const;
  int max_size() const noexcept { return static_cast<int>(probability.size()) - 1; }

  friend bool operator==(const SizeDistribution&, const SizeDistribution&) = default;
};

// Per-size limit vectors from clean and backdoored corpora. Sizes missing
// from the backdoored corpus use the clean vectors for both chains.
std::map<int, LimitDistributions> per_size_limits(std::span<const Graph> clean, std::span<const Graph> backdoored,
                                                  double r);

// G^T with n nodes, drawn i.i.d. per node and per unordered pair from the
// clean or backdoored limit vectors.
Graph sample_prior_n(const LimitDistributions& lim, int n, bool backdoored, Rng& rng);
Graph sample_prior(const LimitDistributions& lim, const SizeDistribution& sizes, bool backdoored,
                   std::uint64_t seed);

// p(z^{t-1} | G^t) = sum_x q(z^{t-1} | z^t, z = x) p_hat(x) per node and pair.
// At t = 1 the prediction itself is returned.
SoftGraph reverse_posterior(const SoftGraph& prediction, const Graph& g_t, int t, const NoiseSchedule& sched,
                            const LimitDistributions& lim, bool backdoored);

// Draws G^{t-1} from a soft graph: one categorical per node and unordered pair.
Graph sample_soft(const SoftGraph& p, std::uint64_t seed);

Graph reverse_step(const DenoiserModel& model, const Graph& g_t, int t, const NoiseSchedule& sched,
                   const LimitDistributions& lim, bool backdoored, std::uint64_t seed);

struct Generation {
  std::vector<Graph> graphs;
  std::vector<std::uint64_t> seeds;  // per-graph seed, replayable with generate_one
};

Graph generate_one(const DenoiserModel& model, const DiffusionSetup& setup, const SizeDistribution& sizes,
                   bool backdoored, std::uint64_t graph_seed);

Generation generate(const DenoiserModel& model, const DiffusionSetup& setup, const SizeDistribution& sizes, int count,
                    bool backdoored, std::uint64_t seed);

}  // namespace backdiff
