#include "backdiff/sampling.hpp"

#include <cmath>

#include "backdiff/error.hpp"

namespace backdiff {

SizeDistribution SizeDistribution::from_graphs(std::span<const Graph> graphs) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyCorpus, "size distribution of an empty corpus");
  int max_n = 0;
  for (const auto& g : graphs) max_n = std::max(max_n, g.n());
  SizeDistribution s;
  s.probability.assign(static_cast<std::size_t>(max_n) + 1, 0.0);
  for (const auto& g : graphs) s.probability[static_cast<std::size_t>(g.n())] += 1.0;
  for (double& p : s.probability) p /= static_cast<double>(graphs.size());
  return s;
}

SizeDistribution SizeDistribution::single(int n) {
  if (n < 1) throw Error(ErrorCode::OutOfRange, "graph size must be positive");
  SizeDistribution s;
  s.probability.assign(static_cast<std::size_t>(n) + 1, 0.0);
  s.probability.back() = 1.0;
  return s;
}

void SizeDistribution::validate() const {
  double total = 0.0;
  for (double p : probability) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::BadDistribution, "negative size probability");
    total += p;
  }
  if (probability.empty() || std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadDistribution, "size probabilities do not sum to 1");
  }
  if (probability[0] > 0.0) throw Error(ErrorCode::BadDistribution, "size distribution puts mass on n = 0");
}

int SizeDistribution::sample(Rng& rng) const { return static_cast<int>(rng.categorical(probability)); }

std::map<int, LimitDistributions> per_size_limits(std::span<const Graph> clean, std::span<const Graph> backdoored,
                                                  double r) {
  std::map<int, std::vector<Graph>> by_clean;
  std::map<int, std::vector<Graph>> by_bd;
  for (const auto& g : clean) by_clean[g.n()].push_back(g);
  for (const auto& g : backdoored) by_bd[g.n()].push_back(g);
  std::map<int, LimitDistributions> out;
  for (const auto& [n, gs] : by_clean) {
    const auto it = by_bd.find(n);
    out[n] = estimate_limits(gs, it == by_bd.end() ? gs : it->second, r);
  }
  for (const auto& [n, gs] : by_bd) {
    if (!out.contains(n)) out[n] = estimate_limits(gs, gs, r);
  }
  return out;
}

Graph sample_prior_n(const LimitDistributions& lim, int n, bool backdoored, Rng& rng) {
  const Chain chain = backdoored ? Chain::Backdoored : Chain::Clean;
  const Eigen::VectorXd& mx = node_limit(lim, chain);
  const Eigen::VectorXd& me = edge_limit(lim, chain);
  const std::span<const double> px(mx.data(), static_cast<std::size_t>(mx.size()));
  const std::span<const double> pe(me.data(), static_cast<std::size_t>(me.size()));
  Graph g(n, static_cast<int>(mx.size()), static_cast<int>(me.size()));
  for (int i = 0; i < n; ++i) g.set_node(i, static_cast<int>(rng.categorical(px)));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) g.set_edge(i, j, static_cast<int>(rng.categorical(pe)));
  }
  return g;
}

Graph sample_prior(const LimitDistributions& lim, const SizeDistribution& sizes, bool backdoored,
                   std::uint64_t seed) {
  lim.validate();
  sizes.validate();
  Rng rng(seed);
  const int n = sizes.sample(rng);
  return sample_prior_n(lim, n, backdoored, rng);
}

SoftGraph reverse_posterior(const SoftGraph& prediction, const Graph& g_t, int t, const NoiseSchedule& sched,
                            const LimitDistributions& lim, bool backdoored) {
  if (t < 1 || t > sched.steps()) throw Error(ErrorCode::BadT, "t outside 1..T");
  if (prediction.n != g_t.n()) throw Error(ErrorCode::DimensionMismatch, "prediction and graph differ in size");
  if (t == 1) return prediction;
  const Chain chain = backdoored ? Chain::Backdoored : Chain::Clean;
  const Eigen::VectorXd& mx = node_limit(lim, chain);
  const Eigen::VectorXd& me = edge_limit(lim, chain);
  const TransitionMatrix qx = step_matrix(sched.alpha(t), mx);
  const TransitionMatrix qe = step_matrix(sched.alpha(t), me);
  const TransitionMatrix qx_prev = cumulative_matrix(sched, t - 1, mx);
  const TransitionMatrix qe_prev = cumulative_matrix(sched, t - 1, me);

  // Tables depend only on the observed class, so build them once per class.
  std::vector<Eigen::MatrixXd> node_tables;
  std::vector<Eigen::MatrixXd> edge_tables;
  for (int k = 0; k < mx.size(); ++k) node_tables.push_back(posterior_table(k, qx, qx_prev));
  for (int k = 0; k < me.size(); ++k) edge_tables.push_back(posterior_table(k, qe, qe_prev));

  const int n = g_t.n();
  SoftGraph out(n, static_cast<int>(mx.size()), static_cast<int>(me.size()));
  for (int i = 0; i < n; ++i) {
    out.px.row(i) = prediction.px.row(i) * node_tables[static_cast<std::size_t>(g_t.node(i))];
  }
  out.pe.setZero();
  for (int i = 0; i < n; ++i) {
    out.pe(static_cast<Eigen::Index>(pair_index(i, i, n)), kNoEdge) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const auto ij = static_cast<Eigen::Index>(pair_index(i, j, n));
      const auto ji = static_cast<Eigen::Index>(pair_index(j, i, n));
      out.pe.row(ij) = prediction.pe.row(ij) * edge_tables[static_cast<std::size_t>(g_t.edge(i, j))];
      out.pe.row(ji) = out.pe.row(ij);
    }
  }
  return out;
}

Graph sample_soft(const SoftGraph& p, std::uint64_t seed) { return sample_noisy(p, nullptr, seed); }

Graph reverse_step(const DenoiserModel& model, const Graph& g_t, int t, const NoiseSchedule& sched,
                   const LimitDistributions& lim, bool backdoored, std::uint64_t seed) {
  const SoftGraph pred = denoiser_forward(model, g_t, t, sched.steps());
  return sample_soft(reverse_posterior(pred, g_t, t, sched, lim, backdoored), seed);
}

Graph generate_one(const DenoiserModel& model, const DiffusionSetup& setup, const SizeDistribution& sizes,
                   bool backdoored, std::uint64_t graph_seed) {
  Rng rng(derive_seed(graph_seed, 0));
  const int n = sizes.sample(rng);
  const LimitDistributions& lim = setup.limits_for(n);
  Graph g = sample_prior_n(lim, n, backdoored, rng);
  for (int t = setup.schedule.steps(); t >= 1; --t) {
    g = reverse_step(model, g, t, setup.schedule, lim, backdoored, derive_seed(graph_seed, static_cast<std::uint64_t>(t)));
  }
  return g;
}

Generation generate(const DenoiserModel& model, const DiffusionSetup& setup, const SizeDistribution& sizes, int count,
                    bool backdoored, std::uint64_t seed) {
  if (count < 0) throw Error(ErrorCode::OutOfRange, "negative sample count");
  setup.limits.validate();
  sizes.validate();
  Generation out;
  for (int k = 0; k < count; ++k) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(k));
    out.seeds.push_back(s);
    out.graphs.push_back(generate_one(model, setup, sizes, backdoored, s));
  }
  return out;
}

}  // namespace backdiff
