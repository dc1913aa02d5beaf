#include "cmdp/evaluation.hpp"
#include "cmdp/grid.hpp"
#include "cmdp/types.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <fstream>
#include <sstream>

using namespace cmdp;

namespace {

// 1-state CMDP with per-action rewards/costs; the classic analytic instance.
Cmdp one_state(std::vector<double> r, std::vector<double> c, double tau) {
  Cmdp m;
  m.num_states = 1;
  m.num_actions = static_cast<int>(r.size());
  m.num_constraints = 1;
  m.transitions.assign(m.num_actions, Eigen::MatrixXd::Ones(1, 1));
  m.reward.resize(1, m.num_actions);
  Eigen::MatrixXd cost(1, m.num_actions);
  for (int a = 0; a < m.num_actions; ++a) {
    m.reward(0, a) = r[a];
    cost(0, a) = c[a];
  }
  m.costs = {cost};
  m.thresholds = Eigen::VectorXd::Constant(1, tau);
  m.initial_dist = Eigen::VectorXd::Ones(1);
  return m;
}

Policy single_row(std::vector<double> probs) {
  Policy p;
  p.probs.resize(1, static_cast<int>(probs.size()));
  for (std::size_t a = 0; a < probs.size(); ++a) p.probs(0, a) = probs[a];
  return p;
}

EnvSpec load_asset(const std::string& name) {
  std::ifstream in(std::string(CMDP_ASSET_DIR) + "/" + name + ".grid");
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_grid_spec(buf.str());
}

}  // namespace

TEST_CASE("stationary distribution of a single recurrent state") {
  const Cmdp m = one_state({0.7}, {0.0}, 1.0);
  const auto d = stationary_distribution(single_row({1.0}), m);
  CHECK(d.size() == 1);
  CHECK(d[0] == doctest::Approx(1.0));
}

TEST_CASE("stationary distribution of the symmetric 2-state chain") {
  Cmdp m;
  m.num_states = 2;
  m.num_actions = 1;
  m.num_constraints = 0;
  Eigen::MatrixXd t(2, 2);
  t << 0.5, 0.5, 0.5, 0.5;
  m.transitions = {t};
  m.reward = Eigen::MatrixXd::Zero(2, 1);
  m.thresholds.resize(0);
  m.initial_dist = Eigen::VectorXd::Zero(2);
  m.initial_dist[0] = 1.0;
  const auto d = stationary_distribution(Policy::uniform(2, 1), m);
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(d[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("stationary distribution matches brute-force matrix powering") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const Cmdp m = oracle::random_cmdp(rng, 3, 2, 1);
    const Policy pi = oracle::random_policy(rng, 3, 2);
    const auto d = stationary_distribution(pi, m);
    const auto expected = oracle::power_stationary(policy_chain(pi, m), m.initial_dist, 10000);
    CHECK((d - expected).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(d.sum() - 1.0) < 1e-9);
    // fixed-point residual contract
    CHECK((d.transpose() * policy_chain(pi, m) - d.transpose()).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("stationary distribution handles periodic unichains") {
  // Deterministic 2-cycle: plain power iteration oscillates forever.
  Cmdp m;
  m.num_states = 2;
  m.num_actions = 1;
  m.num_constraints = 0;
  Eigen::MatrixXd t(2, 2);
  t << 0, 1, 1, 0;
  m.transitions = {t};
  m.reward = Eigen::MatrixXd::Zero(2, 1);
  m.initial_dist = Eigen::VectorXd::Zero(2);
  m.initial_dist[0] = 1.0;
  const auto d = stationary_distribution(Policy::uniform(2, 1), m);
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("stationary distribution is independent of the start vector") {
  Rng rng(77);
  const Cmdp m = oracle::random_cmdp(rng, 4, 2, 1);
  Cmdp other = m;
  other.initial_dist.setConstant(0.25);
  const Policy pi = oracle::random_policy(rng, 4, 2);
  const auto d1 = stationary_distribution(pi, m);
  const auto d2 = stationary_distribution(pi, other);
  CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("average values on degenerate chains") {
  CHECK(average_values(single_row({1.0}), one_state({0.7}, {0.0}, 1.0)).reward_rate ==
        doctest::Approx(0.7));
  const auto v = average_values(single_row({0.5, 0.5}), one_state({1, 0}, {1, 0}, 1.0));
  CHECK(v.reward_rate == doctest::Approx(0.5));
  CHECK(v.cost_rates[0] == doctest::Approx(0.5));
}

TEST_CASE("average values match a long rollout on the 4x4 asset") {
  const TabularEnv env(load_asset("marsrover_4x4"), 0.2);
  const Policy uniform = Policy::uniform(env.num_states(), env.num_actions());
  const AverageValues values = average_values(uniform, env.model());

  Rng rng(2024);
  int state = env.initial_state();
  double reward = 0;
  Eigen::VectorXd cost(1);
  double reward_sum = 0, cost_sum = 0;
  const int steps = 1000000;
  for (int t = 0; t < steps; ++t) {
    state = env.step(state, rng.below(4), rng, reward, cost);
    reward_sum += reward;
    cost_sum += cost[0];
  }
  CHECK(std::abs(reward_sum / steps - values.reward_rate) < 0.01);
  CHECK(std::abs(cost_sum / steps - values.cost_rates[0]) < 0.01);
}

TEST_CASE("occupancy to policy") {
  SUBCASE("point mass gives a deterministic row and uniform elsewhere") {
    OccupancyMeasure mu;
    mu.mu = Eigen::MatrixXd::Zero(2, 2);
    mu.mu(0, 1) = 1.0;
    const Policy pi = occupancy_to_policy(mu);
    CHECK(pi.probs(0, 1) == doctest::Approx(1.0));
    CHECK(pi.probs(1, 0) == doctest::Approx(0.5));
    CHECK(pi.probs(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("rows are normalized") {
    OccupancyMeasure mu;
    mu.mu = Eigen::MatrixXd::Zero(1, 2);
    mu.mu << 0.3, 0.1;
    const Policy pi = occupancy_to_policy(mu);
    CHECK(pi.probs(0, 0) == doctest::Approx(0.75));
    CHECK(pi.probs(0, 1) == doctest::Approx(0.25));
  }
}

TEST_CASE("policy to occupancy") {
  SUBCASE("single state") {
    const auto mu = policy_to_occupancy(single_row({0.5, 0.5}), one_state({1, 0}, {1, 0}, 1.0));
    CHECK(mu.mu(0, 0) == doctest::Approx(0.5));
    CHECK(mu.mu(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("deterministic 2-state cycle is uniform on the traversed pairs") {
    Cmdp m;
    m.num_states = 2;
    m.num_actions = 2;
    m.num_constraints = 0;
    Eigen::MatrixXd cycle(2, 2), stay(2, 2);
    cycle << 0, 1, 1, 0;
    stay << 1, 0, 0, 1;
    m.transitions = {cycle, stay};
    m.reward = Eigen::MatrixXd::Zero(2, 2);
    m.initial_dist = Eigen::VectorXd::Zero(2);
    m.initial_dist[0] = 1.0;
    const Policy always_cycle = Policy::deterministic(2, 2, {0, 0});
    const auto mu = policy_to_occupancy(always_cycle, m);
    CHECK(mu.mu(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(mu.mu(1, 0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(mu.mu(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("mu-weighted reward equals the average value") {
    Rng rng(303);
    const Cmdp m = oracle::random_cmdp(rng, 3, 2, 1);
    const Policy pi = oracle::random_policy(rng, 3, 2);
    const auto mu = policy_to_occupancy(pi, m);
    const auto v = average_values(pi, m);
    CHECK(std::abs(mu.mu.cwiseProduct(m.reward).sum() - v.reward_rate) < 1e-8);
    CHECK(std::abs(mu.mu.cwiseProduct(m.costs[0]).sum() - v.cost_rates[0]) < 1e-8);
  }
}

TEST_CASE("occupancy/policy round trip on full-support chains") {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const Cmdp m = oracle::random_cmdp(rng, 4, 3, 1);
    const Policy pi = oracle::random_policy(rng, 4, 3, 0.05);
    const Policy back = occupancy_to_policy(policy_to_occupancy(pi, m));
    CHECK((back.probs - pi.probs).cwiseAbs().maxCoeff() < 1e-6);
    back.validate(1e-9);
  }
}

TEST_CASE("mixture updates") {
  MixturePolicy mix = MixturePolicy::zero(1, 2);
  const Policy first = single_row({1.0, 0.0});
  mix = mixture_update(mix, first, 1);
  CHECK(mix.probs(0, 0) == doctest::Approx(1.0));

  mix = mixture_update(mix, single_row({0.0, 1.0}), 2);
  CHECK(mix.probs(0, 0) == doctest::Approx(0.5));
  CHECK(mix.probs(0, 1) == doctest::Approx(0.5));

  SUBCASE("five deterministic policies average exactly") {
    MixturePolicy running = MixturePolicy::zero(1, 2);
    Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(1, 2);
    const int picks[5] = {0, 1, 1, 0, 1};
    for (int k = 1; k <= 5; ++k) {
      const Policy pi = single_row(picks[k - 1] == 0 ? std::vector<double>{1.0, 0.0}
                                                     : std::vector<double>{0.0, 1.0});
      running = mixture_update(running, pi, k);
      direct += pi.probs;
    }
    direct /= 5.0;
    CHECK((running.probs - direct).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(running.probs.row(0).sum() - 1.0) < 1e-12);
  }

  SUBCASE("episode index mismatch is rejected") {
    MixturePolicy stale = MixturePolicy::zero(1, 2);
    CHECK_THROWS_AS(mixture_update(stale, first, 3), std::invalid_argument);
  }
}

TEST_CASE("cmdp validation catches malformed models") {
  Cmdp m = one_state({0.5}, {0.5}, 0.5);
  CHECK_NOTHROW(m.validate());
  Cmdp bad_row = m;
  bad_row.transitions[0](0, 0) = 0.9;
  CHECK_THROWS_AS(bad_row.validate(), std::invalid_argument);
  Cmdp bad_reward = m;
  bad_reward.reward(0, 0) = 1.5;
  CHECK_THROWS_AS(bad_reward.validate(), std::invalid_argument);
  Cmdp bad_rho = m;
  bad_rho.initial_dist[0] = 0.7;
  CHECK_THROWS_AS(bad_rho.validate(), std::invalid_argument);
}

TEST_CASE("policies produced anywhere are row-stochastic") {
  Rng rng(505);
  for (int trial = 0; trial < 20; ++trial) {
    const Policy pi = oracle::random_policy(rng, 5, 4, 0.0);
    pi.validate(1e-9);
    for (int s = 0; s < 5; ++s) CHECK(pi.probs.row(s).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}
