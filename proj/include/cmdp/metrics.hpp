#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cmdp {

// Per-step trace of one agent run.
struct MetricsLog {
  std::vector<double> rewards;
  std::vector<std::vector<double>> costs;  // one series per cost channel
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<int> epoch_of_step;  // 1-based epoch index
  int num_epochs = 0;
  int fallback_events = 0;  // infeasible plans resolved by the max-slack LP
  int planner_warnings = 0;
  int num_states = 0;
  int num_actions = 0;

  std::int64_t horizon() const { return static_cast<std::int64_t>(rewards.size()); }
};

inline std::vector<double> running_average(const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    out[i] = sum / static_cast<double>(i + 1);
  }
  return out;
}

// Epoch-count bound K_T <= sqrt(2 S A T ln T) for the doubling schedule.
inline double epoch_count_bound(int num_states, int num_actions, std::int64_t horizon) {
  const double t = static_cast<double>(horizon);
  return std::sqrt(2.0 * num_states * num_actions * t * std::log(std::max(2.0, t)));
}

struct RegretSeries {
  std::vector<double> reward_regret;               // cumulative [r* - r_t]_+
  std::vector<std::vector<double>> cost_regrets;   // cumulative [c_t - tau_i]_+
  double r_star = 0.0;
};

// Clipped cumulative regrets. The instantaneous reward term r* - r_t can be
// negative when constraints are violated; it is clipped at zero before
// summation, so both series are non-decreasing.
inline RegretSeries compute_regret(const MetricsLog& log, double r_star,
                                   const Eigen::VectorXd& tau) {
  if (static_cast<std::size_t>(tau.size()) != log.costs.size())
    throw std::invalid_argument("compute_regret: threshold count mismatch");
  RegretSeries out;
  out.r_star = r_star;
  out.reward_regret.resize(log.rewards.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < log.rewards.size(); ++t) {
    acc += std::max(0.0, r_star - log.rewards[t]);
    out.reward_regret[t] = acc;
  }
  out.cost_regrets.resize(log.costs.size());
  for (std::size_t i = 0; i < log.costs.size(); ++i) {
    out.cost_regrets[i].resize(log.costs[i].size());
    double c = 0.0;
    for (std::size_t t = 0; t < log.costs[i].size(); ++t) {
      c += std::max(0.0, log.costs[i][t] - tau[i]);
      out.cost_regrets[i][t] = c;
    }
  }
  return out;
}

}  // namespace cmdp
