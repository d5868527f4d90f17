#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "backdiff/graph.hpp"

namespace backdiff {

enum class ScheduleKind { Cosine, Linear };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view to_string(ScheduleKind kind) noexcept;

// Per-step retention factors alpha^t, t = 1..T, and their running products.
//
// Timesteps are 1-based at this interface: alpha(t) is the t-th factor and
// alpha_bar(t) = alpha(1) * ... * alpha(t); alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> alpha);

  int steps() const noexcept { return static_cast<int>(alpha_.size()); }
  double alpha(int t) const;
  double alpha_bar(int t) const;

  const std::vector<double>& alphas() const noexcept { return alpha_; }
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;

 private:
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

// alpha_bar(t) = cos^2(((t/T + s) / (1 + s)) * pi / 2), s = 0.008, with
// per-step factors clipped to [1e-4, 1 - 1e-9].
NoiseSchedule cosine_schedule(int steps);
// DDPM-style linearly increasing betas rescaled to the step count.
NoiseSchedule linear_schedule(int steps);
NoiseSchedule make_schedule(ScheduleKind kind, int steps);

// Node and edge limit vectors for the clean and backdoored chains.
struct LimitDistributions {
  Eigen::VectorXd node;             // m_X
  Eigen::VectorXd edge;             // m_E
  Eigen::VectorXd node_backdoored;  // m_XB = (1 - r) m_X + r m_Xr
  Eigen::VectorXd edge_backdoored;  // m_EB
  double mix_ratio = 0.5;           // r

  void validate() const;
};

// Row-stochastic c x c transition matrix.
using TransitionMatrix = Eigen::MatrixXd;

// alpha I + (1 - alpha) 1 m^T
TransitionMatrix step_matrix(double alpha, const Eigen::VectorXd& m);
// Closed form Q^1 ... Q^t = alpha_bar I + (1 - alpha_bar) 1 m^T; t = 0 gives I.
TransitionMatrix cumulative_matrix(const NoiseSchedule& sched, int t, const Eigen::VectorXd& m);

// Empirical node-type frequencies over all nodes and edge-type frequencies
// over unordered pairs i < j (no-edge included).
Eigen::VectorXd node_marginal(std::span<const Graph> graphs);
Eigen::VectorXd edge_marginal(std::span<const Graph> graphs);

LimitDistributions estimate_limits(std::span<const Graph> clean, std::span<const Graph> backdoored, double r);

// Throws BadDistribution unless m is a probability vector within tol.
void check_distribution(const Eigen::VectorXd& m, double tol = 1e-9);

}  // namespace backdiff
