#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "backdiff/graph.hpp"
#include "backdiff/schedule.hpp"
#include "backdiff/trigger.hpp"

namespace backdiff {

// Schedule, limits and trigger shared by training and sampling.
struct DiffusionSetup {
  NoiseSchedule schedule;
  LimitDistributions limits;
  std::map<int, LimitDistributions> per_size;  // empty: size-independent limits
  TriggerSpec trigger;

  const LimitDistributions& limits_for(int n) const;
};

// Which limit distribution a Markov chain is driven toward.
enum class Chain { Clean, Backdoored };

const Eigen::VectorXd& node_limit(const LimitDistributions& lim, Chain chain) noexcept;
const Eigen::VectorXd& edge_limit(const LimitDistributions& lim, Chain chain) noexcept;

struct NoisyGraphSample {
  int t = 0;
  Graph graph;
  SoftGraph soft;
  std::optional<TriggerMasks> masks;
};

// q(G^t | G) under `chain` without any trigger pinning: rows of X Qbar^t and
// E Qbar^t. Only pairs i < j are computed and then mirrored.
SoftGraph forward_marginal(const Graph& g, Chain chain, const NoiseSchedule& sched,
                           const LimitDistributions& lim, int t);

SoftGraph forward_marginal_clean(const Graph& g, const NoiseSchedule& sched, const LimitDistributions& lim, int t);

// Backdoored marginal: unmasked entries diffuse under the backdoored
// cumulative matrices, masked entries are the exact trigger one-hots.
SoftGraph forward_marginal_backdoored(const Graph& gb, const TriggerMasks& masks, const TriggerSpec& spec,
                                      const NoiseSchedule& sched, const LimitDistributions& lim, int t);

// Independent categorical draw per node and per unordered pair, mirrored.
// Masked positions are copied from the (one-hot) soft rows, never resampled.
Graph sample_noisy(const SoftGraph& soft, const TriggerMasks* masks, std::uint64_t seed);

// Table whose row x is q(z^{t-1} | z^t = observed, z = x) for one categorical
// variable; rows are normalised after an epsilon floor.
Eigen::MatrixXd posterior_table(int observed, const TransitionMatrix& step, const TransitionMatrix& cumulative_prev);

// q(G^{t-1} | G^t, G) for the clean chain, 1 <= t <= T (t = 1 collapses onto G).
SoftGraph true_posterior_clean(const Graph& g, const Graph& g_t, const NoiseSchedule& sched,
                               const LimitDistributions& lim, int t);

// Posterior of the trigger-pinned chain: masked entries are the trigger
// one-hots, the rest are normalised Bayes posteriors under the backdoored
// matrices.
SoftGraph true_posterior_backdoored(const Graph& gb, const Graph& gb_t, const TriggerMasks& masks,
                                    const TriggerSpec& spec, const NoiseSchedule& sched,
                                    const LimitDistributions& lim, int t);

// Posterior under an arbitrary chain with no pinning.
SoftGraph true_posterior(const Graph& g, const Graph& g_t, Chain chain, const NoiseSchedule& sched,
                         const LimitDistributions& lim, int t);

}  // namespace backdiff
