#include "backdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "backdiff/error.hpp"

namespace backdiff {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "linear") return ScheduleKind::Linear;
  throw Error(ErrorCode::BadConfig, "unknown schedule '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) noexcept {
  return kind == ScheduleKind::Cosine ? "cosine" : "linear";
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.empty()) throw Error(ErrorCode::BadT, "schedule needs at least one step");
  alpha_bar_.reserve(alpha_.size());
  double prod = 1.0;
  for (double a : alpha_) {
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::BadT, "alpha outside (0,1): " + std::to_string(a));
    prod *= a;
    alpha_bar_.push_back(prod);
  }
}

double NoiseSchedule::alpha(int t) const {
  if (t < 1 || t > steps()) throw Error(ErrorCode::OutOfRange, "timestep " + std::to_string(t));
  return alpha_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps()) throw Error(ErrorCode::OutOfRange, "timestep " + std::to_string(t));
  return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

namespace {

constexpr double kMinAlpha = 1e-4;
constexpr double kMaxAlpha = 1.0 - 1e-9;

std::vector<double> clip(std::vector<double> alpha) {
  for (double& a : alpha) a = std::clamp(a, kMinAlpha, kMaxAlpha);
  return alpha;
}

}  // namespace

NoiseSchedule cosine_schedule(int steps) {
  if (steps < 2) throw Error(ErrorCode::BadT, "T must be >= 2, got " + std::to_string(steps));
  constexpr double s = 0.008;
  const auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> alpha(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) alpha[static_cast<std::size_t>(t - 1)] = f(t) / f(t - 1);
  return NoiseSchedule(clip(std::move(alpha)));
}

NoiseSchedule linear_schedule(int steps) {
  if (steps < 2) throw Error(ErrorCode::BadT, "T must be >= 2, got " + std::to_string(steps));
  const double scale = 1000.0 / steps;
  const double lo = 1e-4 * scale;
  const double hi = 0.02 * scale;
  std::vector<double> alpha(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    const double beta = lo + (hi - lo) * (t - 1) / (steps - 1);
    alpha[static_cast<std::size_t>(t - 1)] = 1.0 - beta;
  }
  return NoiseSchedule(clip(std::move(alpha)));
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps) {
  return kind == ScheduleKind::Cosine ? cosine_schedule(steps) : linear_schedule(steps);
}

void check_distribution(const Eigen::VectorXd& m, double tol) {
  if (m.size() == 0 || !m.allFinite() || (m.array() < 0.0).any() || std::abs(m.sum() - 1.0) > tol) {
    throw Error(ErrorCode::BadDistribution, "not a probability vector (sum " + std::to_string(m.sum()) + ")");
  }
}

void LimitDistributions::validate() const {
  check_distribution(node, 1e-12);
  check_distribution(edge, 1e-12);
  check_distribution(node_backdoored, 1e-12);
  check_distribution(edge_backdoored, 1e-12);
  if (node.size() != node_backdoored.size() || edge.size() != edge_backdoored.size()) {
    throw Error(ErrorCode::DimensionMismatch, "clean and backdoored limits differ in size");
  }
  if (!(mix_ratio > 0.0 && mix_ratio <= 1.0)) throw Error(ErrorCode::BadDistribution, "r outside (0,1]");
}

TransitionMatrix step_matrix(double alpha, const Eigen::VectorXd& m) {
  check_distribution(m);
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::OutOfRange, "alpha outside (0,1)");
  const auto c = m.size();
  TransitionMatrix q = (1.0 - alpha) * Eigen::VectorXd::Ones(c) * m.transpose();
  q.diagonal().array() += alpha;
  return q;
}

TransitionMatrix cumulative_matrix(const NoiseSchedule& sched, int t, const Eigen::VectorXd& m) {
  check_distribution(m);
  if (t < 0 || t > sched.steps()) throw Error(ErrorCode::OutOfRange, "timestep " + std::to_string(t));
  const double abar = sched.alpha_bar(t);
  const auto c = m.size();
  TransitionMatrix q = (1.0 - abar) * Eigen::VectorXd::Ones(c) * m.transpose();
  q.diagonal().array() += abar;
  return q;
}

Eigen::VectorXd node_marginal(std::span<const Graph> graphs) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyCorpus, "no graphs for node marginal");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(graphs.front().node_types());
  double total = 0.0;
  for (const Graph& g : graphs) {
    for (int i = 0; i < g.n(); ++i) counts(g.node(i)) += 1.0;
    total += g.n();
  }
  if (total == 0.0) throw Error(ErrorCode::EmptyCorpus, "corpus has no nodes");
  return counts / total;
}

Eigen::VectorXd edge_marginal(std::span<const Graph> graphs) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyCorpus, "no graphs for edge marginal");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(graphs.front().edge_types());
  double total = 0.0;
  for (const Graph& g : graphs) {
    for (int i = 0; i < g.n(); ++i)
      for (int j = i + 1; j < g.n(); ++j) counts(g.edge(i, j)) += 1.0;
    total += 0.5 * g.n() * (g.n() - 1);
  }
  if (total == 0.0) throw Error(ErrorCode::EmptyCorpus, "corpus has no node pairs");
  return counts / total;
}

LimitDistributions estimate_limits(std::span<const Graph> clean, std::span<const Graph> backdoored, double r) {
  if (clean.empty() || backdoored.empty()) throw Error(ErrorCode::EmptyCorpus, "limit estimation needs both corpora");
  if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorCode::BadDistribution, "r outside (0,1]: " + std::to_string(r));
  LimitDistributions lim;
  lim.node = node_marginal(clean);
  lim.edge = edge_marginal(clean);
  lim.node_backdoored = (1.0 - r) * lim.node + r * node_marginal(backdoored);
  lim.edge_backdoored = (1.0 - r) * lim.edge + r * edge_marginal(backdoored);
  lim.mix_ratio = r;
  return lim;
}

}  // namespace backdiff
