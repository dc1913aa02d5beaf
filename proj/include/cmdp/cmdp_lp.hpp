#pragma once

#include "cmdp/evaluation.hpp"
#include "cmdp/lp.hpp"
#include "cmdp/types.hpp"

namespace cmdp {

// Occupancy-measure LP for a tabular CMDP. Variables mu(s,a) indexed s*A + a;
// equality rows are the S flow-conservation rows followed by the
// normalization row (one flow row is linearly dependent and is kept anyway);
// inequality rows are the m cost budgets.
template <class Scalar>
LpProblemT<Scalar> build_cmdp_lp(const CmdpT<Scalar>& cmdp) {
  const int S = cmdp.num_states;
  const int A = cmdp.num_actions;
  const int m = cmdp.num_constraints;
  const int n = S * A;

  LpProblemT<Scalar> lp;
  lp.objective.resize(n);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) lp.objective[s * A + a] = cmdp.reward(s, a);

  lp.eq_lhs = MatrixX<Scalar>::Zero(S + 1, n);
  lp.eq_rhs = VectorX<Scalar>::Zero(S + 1);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      lp.eq_lhs(s, s * A + a) += Scalar(1);
      for (int sp = 0; sp < S; ++sp)
        lp.eq_lhs(s, sp * A + a) -= cmdp.transitions[a](sp, s);
    }
  }
  lp.eq_lhs.row(S).setOnes();
  lp.eq_rhs[S] = Scalar(1);

  lp.ineq_lhs = MatrixX<Scalar>::Zero(m, n);
  lp.ineq_rhs = VectorX<Scalar>::Zero(m);
  for (int i = 0; i < m; ++i) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) lp.ineq_lhs(i, s * A + a) = cmdp.costs[i](s, a);
    lp.ineq_rhs[i] = cmdp.thresholds[i];
  }
  return lp;
}

template <class Scalar>
struct CmdpSolutionT {
  OccupancyMeasureT<Scalar> occupancy;
  AverageValuesT<Scalar> values;
  LpSolutionT<Scalar> lp;  // eq_duals[0..S-1] are the flow-row prices
};
using CmdpSolution = CmdpSolutionT<double>;

namespace detail {
template <class Scalar>
CmdpSolutionT<Scalar> unpack_cmdp_lp(const CmdpT<Scalar>& cmdp, LpSolutionT<Scalar> sol) {
  const int S = cmdp.num_states;
  const int A = cmdp.num_actions;
  CmdpSolutionT<Scalar> out;
  out.occupancy.mu.resize(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      out.occupancy.mu(s, a) = std::max(Scalar(0), sol.x[s * A + a]);
  out.values.reward_rate = out.occupancy.mu.cwiseProduct(cmdp.reward).sum();
  out.values.cost_rates.resize(cmdp.num_constraints);
  for (int i = 0; i < cmdp.num_constraints; ++i)
    out.values.cost_rates[i] = out.occupancy.mu.cwiseProduct(cmdp.costs[i]).sum();
  out.lp = std::move(sol);
  return out;
}
}  // namespace detail

// Optimal occupancy measure and its average values. Throws InfeasibleError
// when no stationary policy meets the budgets; the caller decides fallbacks.
template <class Scalar>
CmdpSolutionT<Scalar> solve_cmdp(const CmdpT<Scalar>& cmdp) {
  const auto lp = build_cmdp_lp(cmdp);
  auto sol = solve_lp(lp);
  if (sol.status == LpStatus::infeasible)
    throw InfeasibleError("solve_cmdp: no policy satisfies the cost budgets");
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error(std::string("solve_cmdp: LP solver returned ") +
                             to_string(sol.status));
  return detail::unpack_cmdp_lp(cmdp, std::move(sol));
}

// Fallback for infeasible models: maximize the minimum budget slack
// (possibly negative) with one extra free variable z = z+ - z-,
//   max z  s.t.  flow/normalization rows,  sum mu c_i + z <= tau_i.
// Always feasible, so the returned policy is defined even when the budgets
// cannot be met.
template <class Scalar>
CmdpSolutionT<Scalar> solve_cmdp_max_slack(const CmdpT<Scalar>& cmdp) {
  if (cmdp.num_constraints < 1)
    throw std::invalid_argument("solve_cmdp_max_slack: needs at least one constraint");
  const auto base = build_cmdp_lp(cmdp);
  const int n = base.num_vars();

  LpProblemT<Scalar> lp;
  lp.objective = VectorX<Scalar>::Zero(n + 2);
  lp.objective[n] = Scalar(1);
  lp.objective[n + 1] = Scalar(-1);
  lp.eq_lhs = MatrixX<Scalar>::Zero(base.eq_lhs.rows(), n + 2);
  lp.eq_lhs.leftCols(n) = base.eq_lhs;
  lp.eq_rhs = base.eq_rhs;
  lp.ineq_lhs = MatrixX<Scalar>::Zero(base.ineq_lhs.rows(), n + 2);
  lp.ineq_lhs.leftCols(n) = base.ineq_lhs;
  lp.ineq_lhs.col(n).setOnes();
  lp.ineq_lhs.col(n + 1).setConstant(Scalar(-1));
  lp.ineq_rhs = base.ineq_rhs;

  auto sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error(std::string("solve_cmdp_max_slack: LP solver returned ") +
                             to_string(sol.status));
  LpSolutionT<Scalar> trimmed;
  trimmed.status = sol.status;
  trimmed.x = sol.x.head(n);
  trimmed.objective_value = sol.objective_value;
  trimmed.eq_duals = sol.eq_duals;
  trimmed.ineq_duals = sol.ineq_duals;
  return detail::unpack_cmdp_lp(cmdp, std::move(trimmed));
}

}  // namespace cmdp
