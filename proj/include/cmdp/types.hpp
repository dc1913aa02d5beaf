#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace cmdp {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Transition tensor stored per action: trans[a](s, s') = p(s' | s, a).
template <class Scalar>
using TransitionsT = std::vector<MatrixX<Scalar>>;
using Transitions = TransitionsT<double>;

struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
  double residual;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
template <class Scalar>
void check_stochastic_rows(const MatrixX<Scalar>& m, const char* label, Scalar tol) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < Scalar(0)).any())
      throw std::invalid_argument(std::string(label) + ": negative entry in row " + std::to_string(r));
    const Scalar s = m.row(r).sum();
    if (std::abs(s - Scalar(1)) > tol)
      throw std::invalid_argument(std::string(label) + ": row " + std::to_string(r) +
                                  " sums to " + std::to_string(static_cast<double>(s)));
  }
}
}  // namespace detail

// Tabular constrained MDP: transitions, a reward table, m cost tables with
// thresholds, and an initial state distribution. Rewards and costs live in
// [0, 1]; the objective is max average reward s.t. average cost_i <= tau_i.
template <class Scalar>
struct CmdpT {
  int num_states = 0;
  int num_actions = 0;
  int num_constraints = 0;
  TransitionsT<Scalar> transitions;       // A matrices, each S x S
  MatrixX<Scalar> reward;                 // S x A
  std::vector<MatrixX<Scalar>> costs;     // m matrices, each S x A
  VectorX<Scalar> thresholds;             // m
  VectorX<Scalar> initial_dist;           // S

  void validate(Scalar tol = Scalar(1e-9)) const {
    if (num_states <= 0 || num_actions <= 0 || num_constraints < 0)
      throw std::invalid_argument("cmdp: bad dimensions");
    if (static_cast<int>(transitions.size()) != num_actions)
      throw std::invalid_argument("cmdp: transition tensor has wrong action count");
    for (const auto& p : transitions) {
      if (p.rows() != num_states || p.cols() != num_states)
        throw std::invalid_argument("cmdp: transition matrix has wrong shape");
      detail::check_stochastic_rows(p, "cmdp transitions", tol);
    }
    if (reward.rows() != num_states || reward.cols() != num_actions)
      throw std::invalid_argument("cmdp: reward table has wrong shape");
    if ((reward.array() < Scalar(0)).any() || (reward.array() > Scalar(1)).any())
      throw std::invalid_argument("cmdp: reward outside [0,1]");
    if (static_cast<int>(costs.size()) != num_constraints || thresholds.size() != num_constraints)
      throw std::invalid_argument("cmdp: constraint count mismatch");
    for (const auto& c : costs) {
      if (c.rows() != num_states || c.cols() != num_actions)
        throw std::invalid_argument("cmdp: cost table has wrong shape");
      if ((c.array() < Scalar(0)).any() || (c.array() > Scalar(1)).any())
        throw std::invalid_argument("cmdp: cost outside [0,1]");
    }
    if (initial_dist.size() != num_states)
      throw std::invalid_argument("cmdp: initial distribution has wrong size");
    if ((initial_dist.array() < Scalar(0)).any() ||
        std::abs(initial_dist.sum() - Scalar(1)) > tol)
      throw std::invalid_argument("cmdp: initial distribution is not a distribution");
  }
};
using Cmdp = CmdpT<double>;

// Stationary randomized policy, probs(s, a) = pi(a | s).
template <class Scalar>
struct PolicyT {
  MatrixX<Scalar> probs;

  static PolicyT uniform(int num_states, int num_actions) {
    PolicyT p;
    p.probs = MatrixX<Scalar>::Constant(num_states, num_actions,
                                        Scalar(1) / Scalar(num_actions));
    return p;
  }
  static PolicyT deterministic(int num_states, int num_actions,
                               const std::vector<int>& action_of_state) {
    PolicyT p;
    p.probs = MatrixX<Scalar>::Zero(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) p.probs(s, action_of_state[s]) = Scalar(1);
    return p;
  }
  void validate(Scalar tol = Scalar(1e-9)) const {
    detail::check_stochastic_rows(probs, "policy", tol);
  }
};
using Policy = PolicyT<double>;

// Running average of the per-epoch policies pi_1..pi_k.
template <class Scalar>
struct MixturePolicyT {
  MatrixX<Scalar> probs;
  int episode_index = 0;  // k; 0 means the zero-initialized pre-first-episode state

  static MixturePolicyT zero(int num_states, int num_actions) {
    MixturePolicyT m;
    m.probs = MatrixX<Scalar>::Zero(num_states, num_actions);
    m.episode_index = 0;
    return m;
  }
};
using MixturePolicy = MixturePolicyT<double>;

// Occupancy measure mu(s, a): long-run fraction of time in (s, a).
template <class Scalar>
struct OccupancyMeasureT {
  MatrixX<Scalar> mu;
};
using OccupancyMeasure = OccupancyMeasureT<double>;

template <class Scalar>
struct AverageValuesT {
  Scalar reward_rate = Scalar(0);
  VectorX<Scalar> cost_rates;
};
using AverageValues = AverageValuesT<double>;

}  // namespace cmdp
