#pragma once

#include "cmdp/types.hpp"

#include <utility>

namespace cmdp {

// MDP with an unconstrained scalar pseudo-reward (the Lagrangian
// scalarization r + lambda^T (tau - c) may leave [0, 1]).
template <class Scalar>
struct ScalarizedMdpT {
  TransitionsT<Scalar> transitions;
  MatrixX<Scalar> pseudo_reward;  // S x A
  VectorX<Scalar> initial_dist;   // weights the reported gain
};
using ScalarizedMdp = ScalarizedMdpT<double>;

template <class Scalar>
struct ValueFunctionT {
  VectorX<Scalar> values;
  Scalar gain = Scalar(0);  // (1 - discount) * rho-weighted value
  bool converged = false;
  Scalar last_delta = Scalar(0);
  int sweeps = 0;
};
using ValueFunction = ValueFunctionT<double>;

// Discounted value iteration; the discounted value acts as the
// average-reward proxy. Greedy ties go to the lowest action index.
// On hitting max_iter the best-so-far result is returned with
// converged = false rather than thrown.
template <class Scalar>
std::pair<PolicyT<Scalar>, ValueFunctionT<Scalar>> value_iteration(
    const ScalarizedMdpT<Scalar>& mdp, Scalar discount, Scalar tolerance, int max_iter) {
  if (!(discount > Scalar(0) && discount < Scalar(1)))
    throw std::invalid_argument("value_iteration: discount must be in (0,1)");
  if (!(tolerance > Scalar(0)))
    throw std::invalid_argument("value_iteration: tolerance must be positive");
  const int S = static_cast<int>(mdp.pseudo_reward.rows());
  const int A = static_cast<int>(mdp.pseudo_reward.cols());

  VectorX<Scalar> v = VectorX<Scalar>::Zero(S);
  MatrixX<Scalar> q(S, A);
  ValueFunctionT<Scalar> vf;
  for (vf.sweeps = 0; vf.sweeps < max_iter; ++vf.sweeps) {
    for (int a = 0; a < A; ++a)
      q.col(a) = mdp.pseudo_reward.col(a) + discount * (mdp.transitions[a] * v);
    VectorX<Scalar> next = q.rowwise().maxCoeff();
    vf.last_delta = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (vf.last_delta <= tolerance) {
      vf.converged = true;
      ++vf.sweeps;
      break;
    }
  }

  std::vector<int> greedy(S, 0);
  for (int a = 0; a < A; ++a)
    q.col(a) = mdp.pseudo_reward.col(a) + discount * (mdp.transitions[a] * v);
  for (int s = 0; s < S; ++s) {
    int best = 0;
    for (int a = 1; a < A; ++a)
      if (q(s, a) > q(s, best)) best = a;
    greedy[s] = best;
  }

  vf.values = v;
  vf.gain = (Scalar(1) - discount) * mdp.initial_dist.dot(v);
  return {PolicyT<Scalar>::deterministic(S, A, greedy), std::move(vf)};
}

}  // namespace cmdp
