#pragma once

#include "cmdp/types.hpp"

namespace cmdp {

// State-to-state chain P_pi(s, s') = sum_a pi(a|s) p(s'|s,a).
template <class Scalar>
MatrixX<Scalar> policy_chain(const PolicyT<Scalar>& policy, const CmdpT<Scalar>& cmdp) {
  MatrixX<Scalar> chain = MatrixX<Scalar>::Zero(cmdp.num_states, cmdp.num_states);
  for (int a = 0; a < cmdp.num_actions; ++a)
    chain += policy.probs.col(a).asDiagonal() * cmdp.transitions[a];
  return chain;
}

// Stationary distribution of the chain induced by a policy, by damped power
// iteration d <- d (I + P)/2 started from the initial distribution. The
// damping keeps periodic unichains (deterministic cycles) convergent without
// changing the fixed point; the convergence test is on the undamped residual
// ||d - dP||_inf.
template <class Scalar>
VectorX<Scalar> stationary_distribution(const PolicyT<Scalar>& policy,
                                        const CmdpT<Scalar>& cmdp,
                                        Scalar tol = Scalar(1e-8),
                                        int max_sweeps = 100000) {
  const MatrixX<Scalar> chain = policy_chain(policy, cmdp);
  Eigen::RowVectorX<Scalar> d = cmdp.initial_dist.transpose();
  Scalar residual = Scalar(0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Eigen::RowVectorX<Scalar> next = d * chain;
    residual = (next - d).cwiseAbs().maxCoeff();
    if (residual <= tol) return next.transpose();
    d = Scalar(0.5) * (d + next);
    d /= d.sum();
  }
  throw ConvergenceError("stationary_distribution: power iteration did not converge",
                         static_cast<double>(residual));
}

// Average reward and cost rates of a policy: J = sum_s d(s) sum_a pi(a|s) x(s,a).
template <class Scalar>
AverageValuesT<Scalar> average_values(const PolicyT<Scalar>& policy,
                                      const CmdpT<Scalar>& cmdp,
                                      Scalar tol = Scalar(1e-8),
                                      int max_sweeps = 100000) {
  const VectorX<Scalar> d = stationary_distribution(policy, cmdp, tol, max_sweeps);
  AverageValuesT<Scalar> out;
  out.reward_rate = (d.asDiagonal() * policy.probs).cwiseProduct(cmdp.reward).sum();
  out.cost_rates.resize(cmdp.num_constraints);
  for (int i = 0; i < cmdp.num_constraints; ++i)
    out.cost_rates[i] = (d.asDiagonal() * policy.probs).cwiseProduct(cmdp.costs[i]).sum();
  return out;
}

// pi(a|s) = mu(s,a) / sum_a' mu(s,a'); zero-mass states get the uniform row.
template <class Scalar>
PolicyT<Scalar> occupancy_to_policy(const OccupancyMeasureT<Scalar>& occ) {
  const auto S = occ.mu.rows();
  const auto A = occ.mu.cols();
  PolicyT<Scalar> policy;
  policy.probs.resize(S, A);
  for (Eigen::Index s = 0; s < S; ++s) {
    const Scalar mass = occ.mu.row(s).sum();
    if (mass <= Scalar(1e-15))
      policy.probs.row(s).setConstant(Scalar(1) / Scalar(A));
    else
      policy.probs.row(s) = occ.mu.row(s) / mass;
  }
  return policy;
}

// mu(s,a) = d(s) pi(a|s) for the policy's stationary distribution.
template <class Scalar>
OccupancyMeasureT<Scalar> policy_to_occupancy(const PolicyT<Scalar>& policy,
                                              const CmdpT<Scalar>& cmdp,
                                              Scalar tol = Scalar(1e-8),
                                              int max_sweeps = 100000) {
  const VectorX<Scalar> d = stationary_distribution(policy, cmdp, tol, max_sweeps);
  OccupancyMeasureT<Scalar> occ;
  occ.mu = d.asDiagonal() * policy.probs;
  return occ;
}

// Running average over epoch policies: pi~_k = pi~_{k-1} + (pi_k - pi~_{k-1})/k.
template <class Scalar>
MixturePolicyT<Scalar> mixture_update(const MixturePolicyT<Scalar>& prev,
                                      const PolicyT<Scalar>& new_policy, int k) {
  if (k < 1) throw std::invalid_argument("mixture_update: k must be >= 1");
  if (prev.episode_index != k - 1)
    throw std::invalid_argument("mixture_update: previous mixture is at episode " +
                                std::to_string(prev.episode_index) + ", expected " +
                                std::to_string(k - 1));
  MixturePolicyT<Scalar> out;
  out.probs = prev.probs + (new_policy.probs - prev.probs) / Scalar(k);
  out.episode_index = k;
  return out;
}

}  // namespace cmdp
