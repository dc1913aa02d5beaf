#pragma once

#include "cmdp/cmdp_lp.hpp"
#include "cmdp/counts.hpp"

#include <algorithm>
#include <numeric>

namespace cmdp {

// Box confidence set around empirical transition rows:
// |p'(s,a,s') - center(s,a,s')| <= radius(s,a).
template <class Scalar>
struct ConfidenceSetT {
  TransitionsT<Scalar> center;
  MatrixX<Scalar> radius;  // S x A, >= 0
};
using ConfidenceSet = ConfidenceSetT<double>;

struct BilinearResult {
  OccupancyMeasure occupancy;
  Transitions transitions;
  std::vector<double> objective_trace;  // accepted objectives, non-decreasing
  bool degraded = false;                // a later iterate went infeasible
};

namespace detail {

// Box-constrained simplex row maximizing sum p(s') * value(s'): fill mass
// toward high-value states, lower-bound the rest.
inline Eigen::RowVectorXd optimistic_row(const Eigen::RowVectorXd& center, double radius,
                                         const Eigen::VectorXd& value) {
  const int S = static_cast<int>(center.size());
  Eigen::RowVectorXd lower = center.array().min(1.0).max(0.0);
  Eigen::RowVectorXd upper = lower;
  for (int i = 0; i < S; ++i) {
    upper[i] = std::min(1.0, lower[i] + radius);
    lower[i] = std::max(0.0, lower[i] - radius);
  }
  std::vector<int> order(S);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return value[i] > value[j] || (value[i] == value[j] && i < j);
  });
  Eigen::RowVectorXd p = lower;
  double remaining = 1.0 - lower.sum();
  for (int i : order) {
    if (remaining <= 0.0) break;
    const double d = std::min(upper[i] - lower[i], remaining);
    p[i] += d;
    remaining -= d;
  }
  return p;
}

}  // namespace detail

// Alternating heuristic for the joint occupancy/transition program: solve the
// occupancy LP for fixed transitions, then move each transition row inside
// the confidence box toward the states the LP's flow prices value most.
// Deteriorating steps are rejected, so the accepted objective sequence is
// non-decreasing; stops on improvement < 1e-6 or after max_iter rounds.
inline BilinearResult bilinear_plan(const EmpiricalEstimates& estimates,
                                    const ConfidenceSet& conf, const Cmdp& shell,
                                    int max_iter) {
  if (max_iter < 1) throw std::invalid_argument("bilinear_plan: max_iter must be >= 1");
  if ((conf.radius.array() < 0).any() || !conf.radius.allFinite())
    throw std::invalid_argument("bilinear_plan: radius must be finite and >= 0");
  const int S = shell.num_states;
  const int A = shell.num_actions;

  Cmdp candidate = shell;
  candidate.reward = estimates.mean_reward;
  candidate.costs = estimates.mean_costs;
  candidate.transitions = conf.center;

  BilinearResult result;
  CmdpSolution best = solve_cmdp(candidate);  // InfeasibleError propagates on iterate 1
  result.objective_trace.push_back(best.values.reward_rate);
  Transitions best_trans = candidate.transitions;

  for (int iter = 1; iter < max_iter; ++iter) {
    const Eigen::VectorXd prices = best.lp.eq_duals.head(S);
    Transitions proposal(A, Eigen::MatrixXd(S, S));
    for (int a = 0; a < A; ++a)
      for (int s = 0; s < S; ++s)
        proposal[a].row(s) =
            detail::optimistic_row(conf.center[a].row(s), conf.radius(s, a), prices);

    candidate.transitions = proposal;
    CmdpSolution next;
    try {
      next = solve_cmdp(candidate);
    } catch (const InfeasibleError&) {
      result.degraded = true;
      break;
    }
    if (next.values.reward_rate <= best.values.reward_rate + 1e-6) break;
    best = std::move(next);
    best_trans = std::move(proposal);
    result.objective_trace.push_back(best.values.reward_rate);
  }

  result.occupancy = std::move(best.occupancy);
  result.transitions = std::move(best_trans);
  return result;
}

}  // namespace cmdp
