#include "backdiff/diffusion.hpp"

#include "backdiff/error.hpp"
#include "backdiff/rng.hpp"

namespace backdiff {

namespace {

constexpr double kPosteriorFloor = 1e-30;

void check_t(const NoiseSchedule& sched, int t) {
  if (t < 1 || t > sched.steps()) {
    throw Error(ErrorCode::OutOfRange, "timestep " + std::to_string(t) + " outside [1," +
                                           std::to_string(sched.steps()) + "]");
  }
}

void check_types(const Graph& g, const LimitDistributions& lim) {
  if (g.node_types() != lim.node.size() || g.edge_types() != lim.edge.size()) {
    throw Error(ErrorCode::DimensionMismatch, "graph type counts differ from limit distributions");
  }
}

}  // namespace

const Eigen::VectorXd& node_limit(const LimitDistributions& lim, Chain chain) noexcept {
  return chain == Chain::Clean ? lim.node : lim.node_backdoored;
}

const Eigen::VectorXd& edge_limit(const LimitDistributions& lim, Chain chain) noexcept {
  return chain == Chain::Clean ? lim.edge : lim.edge_backdoored;
}

SoftGraph forward_marginal(const Graph& g, Chain chain, const NoiseSchedule& sched, const LimitDistributions& lim,
                           int t) {
  check_t(sched, t);
  check_types(g, lim);
  const int n = g.n();
  const TransitionMatrix qx = cumulative_matrix(sched, t, node_limit(lim, chain));
  const TransitionMatrix qe = cumulative_matrix(sched, t, edge_limit(lim, chain));
  SoftGraph out(n, g.node_types(), g.edge_types());
  for (int i = 0; i < n; ++i) {
    out.px.row(i) = qx.row(g.node(i));
    out.pe(static_cast<Eigen::Index>(pair_index(i, i, n)), kNoEdge) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const auto ij = static_cast<Eigen::Index>(pair_index(i, j, n));
      out.pe.row(ij) = qe.row(g.edge(i, j));
      out.pe.row(static_cast<Eigen::Index>(pair_index(j, i, n))) = out.pe.row(ij);
    }
  }
  return out;
}

SoftGraph forward_marginal_clean(const Graph& g, const NoiseSchedule& sched, const LimitDistributions& lim, int t) {
  return forward_marginal(g, Chain::Clean, sched, lim, t);
}

SoftGraph forward_marginal_backdoored(const Graph& gb, const TriggerMasks& masks, const TriggerSpec& spec,
                                      const NoiseSchedule& sched, const LimitDistributions& lim, int t) {
  if (masks.n() != gb.n()) throw Error(ErrorCode::DimensionMismatch, "mask size differs from graph size");
  return apply_masked_overwrite(forward_marginal(gb, Chain::Backdoored, sched, lim, t), spec, masks);
}

Graph sample_noisy(const SoftGraph& soft, const TriggerMasks* masks, std::uint64_t seed) {
  const int n = soft.n;
  if (masks && masks->n() != n) throw Error(ErrorCode::DimensionMismatch, "mask size differs from graph size");
  Rng rng(seed);
  Graph g(n, soft.node_types(), soft.edge_types());
  const auto row_span = [](const Eigen::MatrixXd& m, Eigen::Index r, std::vector<double>& buf) {
    buf.resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) buf[static_cast<std::size_t>(k)] = m(r, k);
    return std::span<const double>(buf);
  };
  std::vector<double> buf;
  for (int i = 0; i < n; ++i) {
    if (masks && masks->node(i)) {
      Eigen::Index k;
      soft.px.row(i).maxCoeff(&k);
      g.set_node(i, static_cast<int>(k));
    } else {
      g.set_node(i, static_cast<int>(rng.categorical(row_span(soft.px, i, buf))));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto ij = static_cast<Eigen::Index>(pair_index(i, j, n));
      if (masks && masks->edge(i, j)) {
        Eigen::Index k;
        soft.pe.row(ij).maxCoeff(&k);
        g.set_edge(i, j, static_cast<int>(k));
      } else {
        g.set_edge(i, j, static_cast<int>(rng.categorical(row_span(soft.pe, ij, buf))));
      }
    }
  }
  return g;
}

Eigen::MatrixXd posterior_table(int observed, const TransitionMatrix& step, const TransitionMatrix& cumulative_prev) {
  const auto c = step.rows();
  // Row x: q(z^t = observed | z^{t-1} = k) * q(z^{t-1} = k | z = x), over k.
  Eigen::MatrixXd table = cumulative_prev.array().rowwise() * step.col(observed).transpose().array();
  for (Eigen::Index x = 0; x < c; ++x) {
    const double s = std::max(table.row(x).sum(), kPosteriorFloor);
    table.row(x) /= s;
  }
  return table;
}

SoftGraph true_posterior(const Graph& g, const Graph& g_t, Chain chain, const NoiseSchedule& sched,
                         const LimitDistributions& lim, int t) {
  check_t(sched, t);
  check_types(g, lim);
  if (g.n() != g_t.n() || g.node_types() != g_t.node_types() || g.edge_types() != g_t.edge_types()) {
    throw Error(ErrorCode::DimensionMismatch, "clean and noisy graphs differ in shape");
  }
  const int n = g.n();
  const auto& mx = node_limit(lim, chain);
  const auto& me = edge_limit(lim, chain);
  const TransitionMatrix qx = step_matrix(sched.alpha(t), mx);
  const TransitionMatrix qe = step_matrix(sched.alpha(t), me);
  const TransitionMatrix qx_prev = cumulative_matrix(sched, t - 1, mx);
  const TransitionMatrix qe_prev = cumulative_matrix(sched, t - 1, me);

  SoftGraph out(n, g.node_types(), g.edge_types());
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd row = qx.col(g_t.node(i)).transpose().cwiseProduct(qx_prev.row(g.node(i)));
    out.px.row(i) = row / std::max(row.sum(), kPosteriorFloor);
    out.pe(static_cast<Eigen::Index>(pair_index(i, i, n)), kNoEdge) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      Eigen::RowVectorXd e = qe.col(g_t.edge(i, j)).transpose().cwiseProduct(qe_prev.row(g.edge(i, j)));
      e /= std::max(e.sum(), kPosteriorFloor);
      out.pe.row(static_cast<Eigen::Index>(pair_index(i, j, n))) = e;
      out.pe.row(static_cast<Eigen::Index>(pair_index(j, i, n))) = e;
    }
  }
  return out;
}

SoftGraph true_posterior_clean(const Graph& g, const Graph& g_t, const NoiseSchedule& sched,
                               const LimitDistributions& lim, int t) {
  return true_posterior(g, g_t, Chain::Clean, sched, lim, t);
}

SoftGraph true_posterior_backdoored(const Graph& gb, const Graph& gb_t, const TriggerMasks& masks,
                                    const TriggerSpec& spec, const NoiseSchedule& sched,
                                    const LimitDistributions& lim, int t) {
  if (masks.n() != gb.n()) throw Error(ErrorCode::DimensionMismatch, "mask size differs from graph size");
  return apply_masked_overwrite(true_posterior(gb, gb_t, Chain::Backdoored, sched, lim, t), spec, masks);
}

const LimitDistributions& DiffusionSetup::limits_for(int n) const {
  const auto it = per_size.find(n);
  return it == per_size.end() ? limits : it->second;
}

}  // namespace backdiff
