#include "cmdp/agents.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace cmdp;

namespace {

Cmdp analytic_instance(double tau = 0.5) {
  Cmdp m;
  m.num_states = 1;
  m.num_actions = 2;
  m.num_constraints = 1;
  m.transitions.assign(2, Eigen::MatrixXd::Ones(1, 1));
  m.reward.resize(1, 2);
  m.reward << 1.0, 0.0;
  Eigen::MatrixXd cost(1, 2);
  cost << 1.0, 0.0;
  m.costs = {cost};
  m.thresholds = Eigen::VectorXd::Constant(1, tau);
  m.initial_dist = Eigen::VectorXd::Ones(1);
  return m;
}

// Counts/estimates as if the exact model had been observed `per_pair` times.
void inject_exact(const Cmdp& model, std::int64_t per_pair, CountTables& counts,
                  EmpiricalEstimates& est) {
  counts = CountTables(model.num_states, model.num_actions);
  est = EmpiricalEstimates(model.num_states, model.num_actions, model.num_constraints);
  for (int a = 0; a < model.num_actions; ++a)
    for (int s = 0; s < model.num_states; ++s) {
      std::int64_t row_total = 0;
      for (int sp = 0; sp < model.num_states; ++sp) {
        counts.n_sas[a](s, sp) =
            static_cast<std::int64_t>(std::llround(model.transitions[a](s, sp) * per_pair));
        row_total += counts.n_sas[a](s, sp);
      }
      counts.n_sa(s, a) = row_total;
      est.reward_sum(s, a) = model.reward(s, a) * row_total;
      est.mean_reward(s, a) = model.reward(s, a);
      for (int i = 0; i < model.num_constraints; ++i) {
        est.cost_sums[i](s, a) = model.costs[i](s, a) * row_total;
        est.mean_costs[i](s, a) = model.costs[i](s, a);
      }
    }
}

TabularEnv trivial_env(double budget = 0.2) {
  return TabularEnv(parse_grid_spec("slip 0\nSG\n"), budget);
}

// Least achievable average cost, via the LP with reward 1 - cost.
double min_cost_rate(const Cmdp& model) {
  Cmdp work = model;
  work.reward = (1.0 - model.costs[0].array()).matrix();
  work.thresholds.setConstant(1.0);
  return 1.0 - solve_cmdp(work).values.reward_rate;
}

}  // namespace

TEST_CASE("doubling trigger") {
  CountTables counts(1, 2);
  EpochSchedule sched = EpochSchedule::doubling();
  counts.n_sa(0, 0) = 3;
  sched.begin_epoch(counts, 1);
  counts.n_sa(0, 0) = 5;
  CHECK_FALSE(doubling_should_end(sched, counts, 0, 0));
  counts.n_sa(0, 0) = 6;
  CHECK(doubling_should_end(sched, counts, 0, 0));
  // a pair never seen before the epoch ends it on its first visit
  counts.n_sa(0, 1) = 1;
  CHECK(doubling_should_end(sched, counts, 0, 1));
}

TEST_CASE("linear schedule produces epochs of k*h rounds") {
  const TabularEnv env = trivial_env();
  AgentConfig cfg;
  cfg.algorithm = Algorithm::cucrl_conservative;
  cfg.conservative_h = 3;
  cfg.bonus_coef = 0.0;
  const MetricsLog log = run_agent(env, cfg, 18, 7);
  std::vector<int> expected;
  for (int step = 0; step < 3; ++step) expected.push_back(1);
  for (int step = 0; step < 6; ++step) expected.push_back(2);
  for (int step = 0; step < 9; ++step) expected.push_back(3);
  CHECK(log.epoch_of_step == expected);
}

TEST_CASE("doubling epoch count respects the theoretical bound") {
  const TabularEnv env = trivial_env();
  AgentConfig cfg;
  cfg.algorithm = Algorithm::psrl_transitions;
  const MetricsLog log = run_agent(env, cfg, 10000, 3);
  CHECK(static_cast<double>(log.num_epochs) <=
        epoch_count_bound(log.num_states, log.num_actions, log.horizon()));
}

TEST_CASE("posterior-sampling transition plan") {
  SUBCASE("one-state budget split is sample-independent") {
    const Cmdp shell = analytic_instance();
    CountTables counts(1, 2);
    EmpiricalEstimates est(1, 2, 1);
    inject_exact(shell, 100, counts, est);
    Rng rng(12);
    const PlanResult plan = psrl_transitions_plan(counts, est, shell, rng);
    CHECK(plan.policy.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(plan.fallback);
  }
  SUBCASE("a fixed seed reproduces the policy") {
    Rng instance_rng(900);
    const Cmdp model = oracle::random_cmdp(instance_rng, 3, 2, 1);
    CountTables counts(3, 2);
    EmpiricalEstimates est(3, 2, 1);
    inject_exact(model, 50, counts, est);
    Rng a(5), b(5);
    const PlanResult pa = psrl_transitions_plan(counts, est, model, a);
    const PlanResult pb = psrl_transitions_plan(counts, est, model, b);
    CHECK((pa.policy.probs - pb.policy.probs).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("with overwhelming data the plan recovers the true optimum") {
    Rng instance_rng(901);
    const Cmdp model = oracle::random_cmdp(instance_rng, 3, 2, 1);
    CountTables counts(3, 2);
    EmpiricalEstimates est(3, 2, 1);
    inject_exact(model, 10000000, counts, est);
    Rng rng(6);
    const PlanResult plan = psrl_transitions_plan(counts, est, model, rng);
    const auto planned = average_values(plan.policy, model);
    const auto best = solve_cmdp(model).values;
    CHECK(std::abs(planned.reward_rate - best.reward_rate) < 1e-2);
  }
}

TEST_CASE("lagrangian plan") {
  const Cmdp shell = analytic_instance();
  CountTables counts(1, 2);
  EmpiricalEstimates est(1, 2, 1);
  inject_exact(shell, 1000, counts, est);
  AgentConfig cfg;
  cfg.vi_discount = 0.95;
  cfg.vi_tolerance = 1e-6;
  cfg.vi_max_iter = 100000;

  SUBCASE("zero multipliers reduce to greedy reward maximization") {
    Rng rng(1);
    const DualState dual{Eigen::VectorXd::Zero(1), 0.2};
    const LagrangianPlan plan = psrl_lagrangian_plan(counts, est, dual, shell, rng, cfg);
    CHECK(plan.policy.probs(0, 0) == doctest::Approx(1.0));
    CHECK(plan.dual.lambdas[0] == doctest::Approx(0.2 * (1.0 - 0.5)));
  }
  SUBCASE("huge multipliers force cost minimization") {
    Rng rng(2);
    const DualState dual{Eigen::VectorXd::Constant(1, 1e6), 0.2};
    const LagrangianPlan plan = psrl_lagrangian_plan(counts, est, dual, shell, rng, cfg);
    CHECK(plan.policy.probs(0, 1) == doctest::Approx(1.0));
  }
  SUBCASE("lambda trajectory matches the scalar recurrence exactly") {
    Rng rng(3);
    DualState dual{Eigen::VectorXd::Zero(1), 0.2};
    double lambda_sim = 0.0;
    MixturePolicy mixture = MixturePolicy::zero(1, 2);
    for (int k = 1; k <= 50; ++k) {
      const LagrangianPlan plan = psrl_lagrangian_plan(counts, est, dual, shell, rng, cfg);
      // independent scalar simulation: pick the argmax of r + lambda(tau - c),
      // ties to a0, then project the subgradient step at zero
      const double ra = 1.0 - 0.5 * lambda_sim;
      const double rb = 0.5 * lambda_sim;
      const double cost = ra >= rb ? 1.0 : 0.0;
      lambda_sim = std::max(0.0, lambda_sim + 0.2 * (cost - 0.5));
      CHECK(std::abs(plan.dual.lambdas[0] - lambda_sim) <= 1e-12);
      CHECK(plan.dual.lambdas[0] >= 0.0);
      dual = plan.dual;
      mixture = mixture_update(mixture, plan.policy, k);
    }
  }
  SUBCASE("the long-run mixture meets the budget") {
    Rng rng(4);
    DualState dual{Eigen::VectorXd::Zero(1), 0.2};
    MixturePolicy mixture = MixturePolicy::zero(1, 2);
    for (int k = 1; k <= 1000; ++k) {
      const LagrangianPlan plan = psrl_lagrangian_plan(counts, est, dual, shell, rng, cfg);
      dual = plan.dual;
      mixture = mixture_update(mixture, plan.policy, k);
    }
    Policy pi;
    pi.probs = mixture.probs;
    const auto v = average_values(pi, shell);
    CHECK(std::abs(v.cost_rates[0] - 0.5) < 0.05);
    CHECK(std::abs(v.reward_rate - 0.5) < 0.05);
  }
}

TEST_CASE("optimistic baseline plans") {
  Rng instance_rng(902);
  Cmdp model = oracle::random_cmdp(instance_rng, 3, 2, 1);
  model.thresholds[0] = std::min(1.0, min_cost_rate(model) + 0.2);
  CountTables counts(3, 2);
  EmpiricalEstimates est(3, 2, 1);
  inject_exact(model, 200, counts, est);

  SUBCASE("zero bonus reduces to the plain empirical LP") {
    const PlanResult opt = cucrl_optimistic_plan(counts, est, {0.0}, model, 1000);
    const PlanResult con = cucrl_conservative_plan(counts, est, {0.0}, model, 1000);
    Cmdp empirical = model;
    empirical.transitions = empirical_transitions(counts);
    empirical.reward = est.mean_reward;
    empirical.costs = est.mean_costs;
    const Policy plain = occupancy_to_policy(solve_cmdp(empirical).occupancy);
    CHECK((opt.policy.probs - plain.probs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((con.policy.probs - plain.probs).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("saturated bonus makes the budget vacuous") {
    Cmdp tight = model;
    tight.thresholds[0] = 0.0;  // unmeetable under the true costs
    const PlanResult plan = cucrl_optimistic_plan(counts, est, {1e3}, tight, 1000);
    CHECK_FALSE(plan.fallback);  // clipped costs are all zero
  }
  SUBCASE("double optimism raises, pessimism lowers, the planned objective") {
    const Eigen::MatrixXd b = bonus(counts, 1000, {0.05});
    Cmdp empirical = model;
    empirical.transitions = empirical_transitions(counts);
    empirical.reward = est.mean_reward;
    empirical.costs = est.mean_costs;
    const double plain = solve_cmdp(empirical).values.reward_rate;

    Cmdp optimistic = empirical;
    optimistic.reward = (est.mean_reward + b).cwiseMin(1.0);
    optimistic.costs[0] = (est.mean_costs[0] - b).cwiseMax(0.0);
    CHECK(solve_cmdp(optimistic).values.reward_rate >= plain - 1e-9);

    Cmdp conservative = empirical;
    conservative.reward = est.mean_reward;  // isolate the cost inflation
    conservative.costs[0] = (est.mean_costs[0] + b).cwiseMin(1.0);
    CHECK(solve_cmdp(conservative).values.reward_rate <= plain + 1e-9);
  }
  SUBCASE("an unvisited pair only helps the optimistic objective") {
    CountTables sparse = counts;
    EmpiricalEstimates sparse_est = est;
    sparse.n_sa(1, 1) = 0;
    sparse.n_sas[1].row(1).setZero();
    sparse_est.reward_sum(1, 1) = 0;
    sparse_est.mean_reward(1, 1) = 0;
    sparse_est.cost_sums[0](1, 1) = 0;
    sparse_est.mean_costs[0](1, 1) = 0;
    const Eigen::MatrixXd b = bonus(sparse, 1000, {0.05});
    Cmdp empirical = model;
    empirical.transitions = empirical_transitions(sparse);
    empirical.reward = sparse_est.mean_reward;
    empirical.costs = sparse_est.mean_costs;
    const double plain = solve_cmdp(empirical).values.reward_rate;
    Cmdp optimistic = empirical;
    optimistic.reward = (sparse_est.mean_reward + b).cwiseMin(1.0);
    optimistic.costs[0] = (sparse_est.mean_costs[0] - b).cwiseMax(0.0);
    CHECK(solve_cmdp(optimistic).values.reward_rate >= plain - 1e-9);
  }
}

TEST_CASE("confidence-set transition plan") {
  SUBCASE("zero radius reduces to the plain empirical LP") {
    Rng instance_rng(903);
    const Cmdp model = oracle::random_cmdp(instance_rng, 3, 2, 1);
    CountTables counts(3, 2);
    EmpiricalEstimates est(3, 2, 1);
    inject_exact(model, 400, counts, est);
    const PlanResult plan = cucrl_transitions_plan(counts, est, {0.0}, model, 1000, 20);
    Cmdp empirical = model;
    empirical.transitions = empirical_transitions(counts);
    empirical.reward = est.mean_reward;
    empirical.costs = est.mean_costs;
    const Policy plain = occupancy_to_policy(solve_cmdp(empirical).occupancy);
    CHECK((plan.policy.probs - plain.probs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("one state leaves no transition freedom") {
    const Cmdp shell = analytic_instance();
    CountTables counts(1, 2);
    EmpiricalEstimates est(1, 2, 1);
    inject_exact(shell, 100, counts, est);
    const PlanResult plan = cucrl_transitions_plan(counts, est, {0.5}, shell, 10, 20);
    CHECK(plan.policy.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("the confidence set only helps the objective") {
    Rng instance_rng(904);
    Cmdp model = oracle::random_cmdp(instance_rng, 2, 2, 1, 0.2);
    model.thresholds[0] = std::min(1.0, min_cost_rate(model) + 0.2);
    CountTables counts(2, 2);
    EmpiricalEstimates est(2, 2, 1);
    inject_exact(model, 100, counts, est);
    ConfidenceSet conf{empirical_transitions(counts), bonus(counts, 100, {0.5})};
    Cmdp empirical = model;
    empirical.transitions = conf.center;
    empirical.reward = est.mean_reward;
    empirical.costs = est.mean_costs;
    const double plain = solve_cmdp(empirical).values.reward_rate;
    const auto result = bilinear_plan(est, conf, model, 20);
    CHECK(result.objective_trace.back() >= plain - 1e-9);
  }
}

TEST_CASE("run_agent basics") {
  const TabularEnv env = trivial_env();
  AgentConfig cfg;
  cfg.algorithm = Algorithm::psrl_transitions;

  SUBCASE("a horizon of one step produces a one-row log") {
    const MetricsLog log = run_agent(env, cfg, 1, 1);
    CHECK(log.rewards.size() == 1);
    CHECK(log.costs[0].size() == 1);
    CHECK(log.num_epochs == 1);
  }
  SUBCASE("identical seeds give byte-identical logs") {
    const MetricsLog a = run_agent(env, cfg, 5000, 42);
    const MetricsLog b = run_agent(env, cfg, 5000, 42);
    CHECK(a.rewards == b.rewards);
    CHECK(a.states == b.states);
    CHECK(a.actions == b.actions);
    CHECK(a.epoch_of_step == b.epoch_of_step);
    const MetricsLog c = run_agent(env, cfg, 5000, 43);
    CHECK(a.rewards != c.rewards);
  }
  SUBCASE("agents approach the LP optimum on the trivial environment") {
    const double optimum = solve_cmdp(env.model()).values.reward_rate;  // 0.5
    for (const Algorithm algo : {Algorithm::psrl_transitions, Algorithm::cucrl_optimistic}) {
      AgentConfig c;
      c.algorithm = algo;
      c.bonus_coef = 1e-2;
      const MetricsLog log = run_agent(env, c, 100000, 9);
      const double avg =
          std::accumulate(log.rewards.begin(), log.rewards.end(), 0.0) / log.horizon();
      CHECK(std::abs(avg - optimum) < 0.02);
    }
  }
}

TEST_CASE("all five agents recover the optimum from exact models") {
  Rng instance_rng(905);
  Cmdp model = oracle::random_cmdp(instance_rng, 3, 2, 1);
  model.thresholds[0] = std::min(1.0, min_cost_rate(model) + 0.2);
  CountTables counts(3, 2);
  EmpiricalEstimates est(3, 2, 1);
  inject_exact(model, 10000000, counts, est);
  const auto best = solve_cmdp(model).values;

  const auto check_policy = [&](const Policy& pi) {
    const auto v = average_values(pi, model);
    CHECK(std::abs(v.reward_rate - best.reward_rate) < 1e-3);
    CHECK(v.cost_rates[0] <= best.cost_rates[0] + 1e-3);
  };

  Rng rng(10);
  check_policy(psrl_transitions_plan(counts, est, model, rng).policy);
  check_policy(cucrl_optimistic_plan(counts, est, {0.0}, model, 1000).policy);
  check_policy(cucrl_conservative_plan(counts, est, {0.0}, model, 1000).policy);
  check_policy(cucrl_transitions_plan(counts, est, {0.0}, model, 1000, 20).policy);

  // the Lagrangian agent needs its dual loop: iterate plans on the exact
  // analytic instance and evaluate the mixture
  const Cmdp shell = analytic_instance();
  CountTables tc(1, 2);
  EmpiricalEstimates te(1, 2, 1);
  inject_exact(shell, 1000000, tc, te);
  AgentConfig cfg;
  DualState dual{Eigen::VectorXd::Zero(1), 0.2};
  MixturePolicy mixture = MixturePolicy::zero(1, 2);
  Rng lr(11);
  for (int k = 1; k <= 20000; ++k) {
    const LagrangianPlan plan = psrl_lagrangian_plan(tc, te, dual, shell, lr, cfg);
    dual = plan.dual;
    mixture = mixture_update(mixture, plan.policy, k);
  }
  Policy pi;
  pi.probs = mixture.probs;
  const auto v = average_values(pi, shell);
  CHECK(std::abs(v.reward_rate - 0.5) < 1e-3);
  CHECK(v.cost_rates[0] <= 0.5 + 1e-3);
}

TEST_CASE("infeasible models fall back instead of aborting") {
  // The box starts in a corner and cannot move: every action costs 1 and the
  // goal is unreachable, so no policy meets a zero budget.
  const TabularEnv env(parse_grid_spec("slip 0\nS.#\n#BG\n"), 0.0);
  AgentConfig cfg;
  cfg.algorithm = Algorithm::psrl_transitions;
  const MetricsLog log = run_agent(env, cfg, 2000, 21);
  CHECK(log.horizon() == 2000);
  CHECK(log.fallback_events >= 1);
}
