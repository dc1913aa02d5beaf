#pragma once

#include "cmdp/bilinear.hpp"
#include "cmdp/cmdp_lp.hpp"
#include "cmdp/counts.hpp"
#include "cmdp/evaluation.hpp"
#include "cmdp/grid.hpp"
#include "cmdp/metrics.hpp"
#include "cmdp/value_iteration.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace cmdp {

enum class Algorithm {
  psrl_transitions,
  psrl_lagrangian,
  cucrl_optimistic,
  cucrl_conservative,
  cucrl_transitions,
};

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::psrl_transitions: return "psrl_transitions";
    case Algorithm::psrl_lagrangian: return "psrl_lagrangian";
    case Algorithm::cucrl_optimistic: return "cucrl_optimistic";
    case Algorithm::cucrl_conservative: return "cucrl_conservative";
    default: return "cucrl_transitions";
  }
}

inline Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::psrl_transitions, Algorithm::psrl_lagrangian,
                      Algorithm::cucrl_optimistic, Algorithm::cucrl_conservative,
                      Algorithm::cucrl_transitions})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

struct AgentConfig {
  Algorithm algorithm = Algorithm::psrl_transitions;
  double bonus_coef = 1e-2;   // optimistic baselines
  double eta = 0.2;           // dual learning rate
  double vi_discount = 0.95;
  double vi_tolerance = 1e-3;
  int vi_max_iter = 50000;
  int conservative_h = 20;    // random-exploration block / linear schedule unit
  double fixed_alpha = 1.0 / 3.0;  // fixed-epoch exponent
  int bilinear_max_iter = 20;
};

struct DualState {
  Eigen::VectorXd lambdas;
  double learning_rate = 0.2;
};

// Replanning schedules: doubling visit counts, linearly growing epochs of
// k*h rounds, or fixed epochs of ceil(T^alpha) rounds.
struct EpochSchedule {
  enum class Kind { doubling, linear, fixed };
  Kind kind = Kind::doubling;
  int h = 0;
  std::int64_t fixed_len = 0;

  int epoch_index = 0;
  std::int64_t epoch_start = 1;
  std::int64_t steps_in_epoch = 0;
  CountMatrix snapshot;

  static EpochSchedule doubling() { return EpochSchedule{}; }
  static EpochSchedule linear(int h) {
    EpochSchedule s;
    s.kind = Kind::linear;
    s.h = h;
    return s;
  }
  static EpochSchedule fixed(double alpha, std::int64_t horizon) {
    EpochSchedule s;
    s.kind = Kind::fixed;
    s.fixed_len = static_cast<std::int64_t>(
        std::ceil(std::pow(static_cast<double>(horizon), alpha)));
    if (s.fixed_len < 1) s.fixed_len = 1;
    return s;
  }

  void begin_epoch(const CountTables& counts, std::int64_t t) {
    ++epoch_index;
    epoch_start = t;
    steps_in_epoch = 0;
    if (kind == Kind::doubling) snapshot = counts.n_sa;
  }
};

// Doubling trigger: the just-visited pair reached twice its epoch-start
// count (a pair never seen before the epoch ends it on its first visit).
inline bool doubling_should_end(const EpochSchedule& schedule, const CountTables& counts,
                                int s, int a) {
  const std::int64_t snap = schedule.snapshot.size() > 0 ? schedule.snapshot(s, a) : 0;
  return counts.n_sa(s, a) >= std::max<std::int64_t>(1, 2 * snap);
}

inline bool epoch_should_end(const EpochSchedule& schedule, const CountTables& counts,
                             int s, int a) {
  switch (schedule.kind) {
    case EpochSchedule::Kind::doubling: return doubling_should_end(schedule, counts, s, a);
    case EpochSchedule::Kind::linear:
      return schedule.steps_in_epoch >=
             static_cast<std::int64_t>(schedule.epoch_index) * schedule.h;
    default: return schedule.steps_in_epoch >= schedule.fixed_len;
  }
}

struct PlanResult {
  Policy policy;
  bool fallback = false;  // budgets unmeetable; max-slack policy returned
};

namespace detail {

// Planning-time reward table: observed pairs keep their sample mean, pairs
// with no data take the maximal reward 1. The empirical mean is undefined
// without observations, and completing it with 0 is pessimistic in the
// [0, 1] reward scale: nothing would ever draw the sampling agents toward
// unexplored regions of a sparse-reward gridworld. The cost tables stay at
// their zero initialization, which is already the optimistic side.
inline Eigen::MatrixXd completed_reward(const CountTables& counts,
                                        const EmpiricalEstimates& estimates) {
  Eigen::MatrixXd r = estimates.mean_reward;
  for (Eigen::Index s = 0; s < r.rows(); ++s)
    for (Eigen::Index a = 0; a < r.cols(); ++a)
      if (counts.n_sa(s, a) == 0) r(s, a) = 1.0;
  return r;
}

// Relative 1e-9 downward jitter. Before much has been learned whole blocks
// of the reward table are exactly equal, every occupancy measure in a large
// face is LP-optimal, and a fixed tie-break would pin the planner to one
// arbitrary vertex across epochs. Optima that are unique at the 1e-9 scale
// are unaffected.
inline void jitter_ties(Eigen::MatrixXd& reward, Rng& rng) {
  for (Eigen::Index s = 0; s < reward.rows(); ++s)
    for (Eigen::Index a = 0; a < reward.cols(); ++a)
      reward(s, a) *= 1.0 - 1e-9 * rng.uniform();
}

inline PlanResult lp_policy(const Cmdp& model) {
  PlanResult out;
  try {
    out.policy = occupancy_to_policy(solve_cmdp(model).occupancy);
  } catch (const InfeasibleError&) {
    out.policy = occupancy_to_policy(solve_cmdp_max_slack(model).occupancy);
    out.fallback = true;
  }
  return out;
}
}  // namespace detail

// Posterior sampling of transitions: plan on a model drawn from the
// Dirichlet posterior with sample-mean rewards and costs.
inline PlanResult psrl_transitions_plan(const CountTables& counts,
                                        const EmpiricalEstimates& estimates,
                                        const Cmdp& shell, Rng& rng) {
  Cmdp model = shell;
  model.transitions = sample_transitions(counts, rng);
  model.reward = detail::completed_reward(counts, estimates);
  model.costs = estimates.mean_costs;
  detail::jitter_ties(model.reward, rng);
  return detail::lp_policy(model);
}

struct LagrangianPlan {
  Policy policy;  // deterministic greedy policy of the scalarized MDP
  DualState dual;
  bool vi_converged = true;
  bool dual_updated = true;
  Eigen::VectorXd sampled_cost_rates;  // J^{pi_k}(c_bar, rho) on the sampled model
};

// Primal-dual posterior sampling: value iteration on the pseudo-reward
// r + lambda^T (tau - c), then a projected subgradient step on lambda using
// the new policy's cost rates in the sampled model.
inline LagrangianPlan psrl_lagrangian_plan(const CountTables& counts,
                                           const EmpiricalEstimates& estimates,
                                           const DualState& dual, const Cmdp& shell,
                                           Rng& rng, const AgentConfig& config) {
  if (dual.learning_rate <= 0) throw std::invalid_argument("psrl_lagrangian_plan: eta must be > 0");
  Cmdp model = shell;
  model.transitions = sample_transitions(counts, rng);
  model.reward = detail::completed_reward(counts, estimates);
  model.costs = estimates.mean_costs;

  ScalarizedMdp mdp;
  mdp.transitions = model.transitions;
  mdp.initial_dist = model.initial_dist;
  mdp.pseudo_reward = model.reward;
  for (int i = 0; i < model.num_constraints; ++i)
    mdp.pseudo_reward +=
        dual.lambdas[i] * (model.thresholds[i] - model.costs[i].array()).matrix();

  auto [policy, vf] =
      value_iteration(mdp, config.vi_discount, config.vi_tolerance, config.vi_max_iter);

  LagrangianPlan out;
  out.policy = std::move(policy);
  out.dual = dual;
  out.vi_converged = vf.converged;
  try {
    const AverageValues values = average_values(out.policy, model);
    out.sampled_cost_rates = values.cost_rates;
    for (int i = 0; i < model.num_constraints; ++i)
      out.dual.lambdas[i] = std::max(
          0.0, dual.lambdas[i] +
                   dual.learning_rate * (values.cost_rates[i] - model.thresholds[i]));
  } catch (const ConvergenceError&) {
    out.dual_updated = false;  // keep lambda; logged upstream as a warning
  }
  return out;
}

// Double optimism: reward bonus added, cost bonus subtracted, empirical
// transitions; clipped back to [0, 1].
inline PlanResult cucrl_optimistic_plan(const CountTables& counts,
                                        const EmpiricalEstimates& estimates,
                                        const BonusConfig& bonus_cfg, const Cmdp& shell,
                                        std::int64_t t) {
  const Eigen::MatrixXd b = bonus(counts, t, bonus_cfg);
  Cmdp model = shell;
  model.transitions = empirical_transitions(counts);
  model.reward = (estimates.mean_reward + b).cwiseMin(1.0);
  model.costs = estimates.mean_costs;
  for (auto& c : model.costs) c = (c - b).cwiseMax(0.0);
  return detail::lp_policy(model);
}

// Conservative exploration: bonus added to rewards and to costs.
inline PlanResult cucrl_conservative_plan(const CountTables& counts,
                                          const EmpiricalEstimates& estimates,
                                          const BonusConfig& bonus_cfg, const Cmdp& shell,
                                          std::int64_t t) {
  const Eigen::MatrixXd b = bonus(counts, t, bonus_cfg);
  Cmdp model = shell;
  model.transitions = empirical_transitions(counts);
  model.reward = (estimates.mean_reward + b).cwiseMin(1.0);
  model.costs = estimates.mean_costs;
  for (auto& c : model.costs) c = (c + b).cwiseMin(1.0);
  return detail::lp_policy(model);
}

// Optimism over transitions: joint occupancy/transition plan inside a box
// confidence set of radius b around the empirical frequencies.
inline PlanResult cucrl_transitions_plan(const CountTables& counts,
                                         const EmpiricalEstimates& estimates,
                                         const BonusConfig& bonus_cfg, const Cmdp& shell,
                                         std::int64_t t, int max_iter) {
  ConfidenceSet conf;
  conf.center = empirical_transitions(counts);
  conf.radius = bonus(counts, t, bonus_cfg);
  EmpiricalEstimates jittered = estimates;
  jittered.mean_reward = detail::completed_reward(counts, estimates);
  Rng tie_rng = Rng::stream(static_cast<std::uint64_t>(t), 3);  // agent is sample-free
  detail::jitter_ties(jittered.mean_reward, tie_rng);
  PlanResult out;
  try {
    out.policy =
        occupancy_to_policy(bilinear_plan(jittered, conf, shell, max_iter).occupancy);
  } catch (const InfeasibleError&) {
    Cmdp model = shell;
    model.transitions = conf.center;
    model.reward = estimates.mean_reward;
    model.costs = estimates.mean_costs;
    out.policy = occupancy_to_policy(solve_cmdp_max_slack(model).occupancy);
    out.fallback = true;
  }
  return out;
}

// Simulator over explicit CMDP tables: next states are sampled from the
// transition rows, rewards and costs are emitted as their table values.
class CmdpSimEnv {
 public:
  explicit CmdpSimEnv(Cmdp model) : model_(std::move(model)) {
    model_.validate();
    model_.initial_dist.maxCoeff(&initial_);
  }
  int num_states() const { return model_.num_states; }
  int num_actions() const { return model_.num_actions; }
  int initial_state() const { return initial_; }
  const Cmdp& model() const { return model_; }
  int step(int state, int action, Rng& rng, double& reward, Eigen::VectorXd& cost) const {
    reward = model_.reward(state, action);
    cost.resize(model_.num_constraints);
    for (int i = 0; i < model_.num_constraints; ++i) cost[i] = model_.costs[i](state, action);
    return rng.categorical(model_.transitions[action].row(state));
  }

 private:
  Cmdp model_;
  int initial_ = 0;
};

// Full online run: replan at epoch starts, act, record every transition.
// Planner failures downgrade to the previous policy and are logged, never
// fatal. Deterministic given (config, horizon, seed).
template <class Env>
MetricsLog run_agent(const Env& env, const AgentConfig& config,
                     std::int64_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("run_agent: horizon must be >= 1");
  Rng env_rng = Rng::stream(seed, 1);
  Rng agent_rng = Rng::stream(seed, 2);

  const Cmdp& shell = env.model();
  const int S = shell.num_states;
  const int A = shell.num_actions;
  const int m = shell.num_constraints;

  CountTables counts(S, A);
  EmpiricalEstimates estimates(S, A, m);

  EpochSchedule schedule;
  switch (config.algorithm) {
    case Algorithm::cucrl_conservative:
      schedule = EpochSchedule::linear(config.conservative_h);
      break;
    case Algorithm::cucrl_transitions:
      schedule = EpochSchedule::fixed(config.fixed_alpha, horizon);
      break;
    default:
      schedule = EpochSchedule::doubling();
  }

  MetricsLog log;
  log.rewards.reserve(horizon);
  log.costs.assign(m, {});
  log.states.reserve(horizon);
  log.actions.reserve(horizon);
  log.epoch_of_step.reserve(horizon);
  log.num_states = S;
  log.num_actions = A;

  DualState dual{Eigen::VectorXd::Zero(m), config.eta};
  MixturePolicy mixture = MixturePolicy::zero(S, A);
  Policy policy = Policy::uniform(S, A);
  bool epoch_done = true;

  int state = env.initial_state();
  double reward = 0.0;
  Eigen::VectorXd cost(m);

  for (std::int64_t t = 1; t <= horizon; ++t) {
    if (epoch_done) {
      schedule.begin_epoch(counts, t);
      try {
        switch (config.algorithm) {
          case Algorithm::psrl_transitions: {
            PlanResult r = psrl_transitions_plan(counts, estimates, shell, agent_rng);
            policy = std::move(r.policy);
            log.fallback_events += r.fallback ? 1 : 0;
            break;
          }
          case Algorithm::psrl_lagrangian: {
            LagrangianPlan r =
                psrl_lagrangian_plan(counts, estimates, dual, shell, agent_rng, config);
            policy = std::move(r.policy);
            dual = std::move(r.dual);
            log.planner_warnings += (r.vi_converged && r.dual_updated) ? 0 : 1;
            break;
          }
          case Algorithm::cucrl_optimistic: {
            PlanResult r =
                cucrl_optimistic_plan(counts, estimates, {config.bonus_coef}, shell, t);
            policy = std::move(r.policy);
            log.fallback_events += r.fallback ? 1 : 0;
            break;
          }
          case Algorithm::cucrl_conservative: {
            PlanResult r =
                cucrl_conservative_plan(counts, estimates, {config.bonus_coef}, shell, t);
            policy = std::move(r.policy);
            log.fallback_events += r.fallback ? 1 : 0;
            break;
          }
          case Algorithm::cucrl_transitions: {
            PlanResult r = cucrl_transitions_plan(counts, estimates, {config.bonus_coef},
                                                  shell, t, config.bilinear_max_iter);
            policy = std::move(r.policy);
            log.fallback_events += r.fallback ? 1 : 0;
            break;
          }
        }
      } catch (const std::exception&) {
        ++log.planner_warnings;  // keep the previous policy
      }
      epoch_done = false;
    }

    int action;
    if (config.algorithm == Algorithm::cucrl_conservative &&
        schedule.steps_in_epoch < config.conservative_h) {
      action = agent_rng.below(A);  // exploration block replacing a safe baseline
    } else if (config.algorithm == Algorithm::psrl_lagrangian) {
      // The executed mixture is the running average of the policies in
      // force, one update per round; averaging per round rather than per
      // epoch keeps the handful of long late epochs from being swamped by
      // the many short exploration epochs.
      mixture = mixture_update(mixture, policy, static_cast<int>(t));
      action = agent_rng.categorical(mixture.probs.row(state));
    } else {
      action = agent_rng.categorical(policy.probs.row(state));
    }

    const int next = env.step(state, action, env_rng, reward, cost);
    record_step(counts, estimates, state, action, next, reward, cost);

    // Dual OGD continues between replans with the realized cost sample, so
    // the multipliers integrate budget excess over time rather than once
    // per (geometrically growing) epoch.
    if (config.algorithm == Algorithm::psrl_lagrangian)
      for (int i = 0; i < m; ++i)
        dual.lambdas[i] =
            std::max(0.0, dual.lambdas[i] + config.eta * (cost[i] - shell.thresholds[i]));

    log.rewards.push_back(reward);
    for (int i = 0; i < m; ++i) log.costs[i].push_back(cost[i]);
    log.states.push_back(state);
    log.actions.push_back(action);
    log.epoch_of_step.push_back(schedule.epoch_index);

    ++schedule.steps_in_epoch;
    epoch_done = epoch_should_end(schedule, counts, state, action);
    state = next;
  }
  log.num_epochs = schedule.epoch_index;
  return log;
}

}  // namespace cmdp
