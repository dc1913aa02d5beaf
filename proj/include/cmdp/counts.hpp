#pragma once

#include "cmdp/rng.hpp"
#include "cmdp/types.hpp"

#include <cmath>
#include <cstdint>

namespace cmdp {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Visit counters N(s,a) and N(s,a,s'); the per-pair totals always equal the
// row sums of the transition counts.
struct CountTables {
  CountMatrix n_sa;                 // S x A
  std::vector<CountMatrix> n_sas;   // per action, S x S

  CountTables() = default;
  CountTables(int num_states, int num_actions) {
    n_sa = CountMatrix::Zero(num_states, num_actions);
    n_sas.assign(num_actions, CountMatrix::Zero(num_states, num_states));
  }
  int num_states() const { return static_cast<int>(n_sa.rows()); }
  int num_actions() const { return static_cast<int>(n_sa.cols()); }
  std::int64_t total() const { return n_sa.sum(); }
};

// Sample-mean rewards and costs with their running sums; mean = sum / max(N, 1).
struct EmpiricalEstimates {
  Eigen::MatrixXd reward_sum, mean_reward;
  std::vector<Eigen::MatrixXd> cost_sums, mean_costs;

  EmpiricalEstimates() = default;
  EmpiricalEstimates(int num_states, int num_actions, int num_constraints) {
    reward_sum = Eigen::MatrixXd::Zero(num_states, num_actions);
    mean_reward = Eigen::MatrixXd::Zero(num_states, num_actions);
    cost_sums.assign(num_constraints, Eigen::MatrixXd::Zero(num_states, num_actions));
    mean_costs.assign(num_constraints, Eigen::MatrixXd::Zero(num_states, num_actions));
  }
  int num_constraints() const { return static_cast<int>(cost_sums.size()); }
};

inline void record_step(CountTables& counts, EmpiricalEstimates& estimates, int s, int a,
                        int next_s, double reward, const Eigen::VectorXd& cost) {
  if (s < 0 || s >= counts.num_states() || a < 0 || a >= counts.num_actions() ||
      next_s < 0 || next_s >= counts.num_states())
    throw std::invalid_argument("record_step: index out of range");
  if (reward < 0.0 || reward > 1.0)
    throw std::invalid_argument("record_step: reward outside [0,1]");
  if (cost.size() != estimates.num_constraints())
    throw std::invalid_argument("record_step: cost vector has wrong size");
  for (Eigen::Index i = 0; i < cost.size(); ++i)
    if (cost[i] < 0.0 || cost[i] > 1.0)
      throw std::invalid_argument("record_step: cost outside [0,1]");

  counts.n_sa(s, a) += 1;
  counts.n_sas[a](s, next_s) += 1;
  const double n = static_cast<double>(counts.n_sa(s, a));
  estimates.reward_sum(s, a) += reward;
  estimates.mean_reward(s, a) = estimates.reward_sum(s, a) / n;
  for (Eigen::Index i = 0; i < cost.size(); ++i) {
    estimates.cost_sums[i](s, a) += cost[i];
    estimates.mean_costs[i](s, a) = estimates.cost_sums[i](s, a) / n;
  }
}

// Posterior draw of the transition tensor: each row is Dirichlet with
// parameters N(s,a,s') + 1 (uniform Dir(1) prior), via normalized Gamma
// variates. Deterministic under a fixed rng state.
inline Transitions sample_transitions(const CountTables& counts, Rng& rng) {
  const int S = counts.num_states();
  const int A = counts.num_actions();
  Transitions trans(A, Eigen::MatrixXd(S, S));
  Eigen::VectorXd alpha(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int sp = 0; sp < S; ++sp)
        alpha[sp] = static_cast<double>(counts.n_sas[a](s, sp)) + 1.0;
      trans[a].row(s) = rng.dirichlet(alpha).transpose();
    }
  }
  return trans;
}

// Plain empirical transition frequencies. A never-visited pair has no
// empirical row; it is set to uniform so the result is a valid model.
inline Transitions empirical_transitions(const CountTables& counts) {
  const int S = counts.num_states();
  const int A = counts.num_actions();
  Transitions trans(A, Eigen::MatrixXd(S, S));
  for (int a = 0; a < A; ++a) {
    for (int s = 0; s < S; ++s) {
      const std::int64_t n = counts.n_sa(s, a);
      if (n == 0)
        trans[a].row(s).setConstant(1.0 / S);
      else
        trans[a].row(s) = counts.n_sas[a].row(s).cast<double>() / static_cast<double>(n);
    }
  }
  return trans;
}

struct BonusConfig {
  double coefficient = 0.0;
};

// Hoeffding-style exploration bonus, clipped to [0, 1]:
//   b(s,a) = coefficient * sqrt(ln(2 S A t) / max(1, N(s,a))).
inline Eigen::MatrixXd bonus(const CountTables& counts, std::int64_t t,
                             const BonusConfig& config) {
  if (t < 1) throw std::invalid_argument("bonus: t must be >= 1");
  if (config.coefficient < 0) throw std::invalid_argument("bonus: negative coefficient");
  const int S = counts.num_states();
  const int A = counts.num_actions();
  const double log_term =
      std::log(2.0 * static_cast<double>(S) * static_cast<double>(A) * static_cast<double>(t));
  Eigen::MatrixXd b(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const double n = static_cast<double>(std::max<std::int64_t>(1, counts.n_sa(s, a)));
      b(s, a) = std::min(1.0, config.coefficient * std::sqrt(log_term / n));
    }
  return b;
}

}  // namespace cmdp
