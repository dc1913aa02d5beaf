#include "cmdp/experiment.hpp"
#include "cmdp/svg.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cmdp::ConfigError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

struct AggregateCsv {
  std::vector<double> steps, mean_reward, std_reward, mean_cost, std_cost;
};

AggregateCsv read_aggregate(const std::string& path) {
  AggregateCsv out;
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(row, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() < 5) continue;
    out.steps.push_back(vals[0]);
    out.mean_reward.push_back(vals[1]);
    out.std_reward.push_back(vals[2]);
    out.mean_cost.push_back(vals[3]);
    out.std_cost.push_back(vals[4]);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers,
            bool full_logs) {
  cmdp::ExperimentConfig cfg;
  try {
    cfg = cmdp::parse_experiment_config(read_file(config_path));
  } catch (const cmdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  cmdp::SuiteResult result;
  try {
    result = cmdp::run_suite(cfg, out_dir, workers, full_logs);
  } catch (const cmdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "env " << cfg.env << "  budget " << cmdp::fmt12(cfg.budget) << "  horizon "
            << cfg.horizon << "  runs " << cfg.runs << "\n";
  std::cout << "optimal " << cmdp::fmt12(result.levels.optimal.reward_rate) << "  fast "
            << cmdp::fmt12(result.levels.fast.reward_rate) << "  safe "
            << (result.levels.has_safe ? cmdp::fmt12(result.levels.safe.reward_rate)
                                       : std::string("absent"))
            << "\n";
  for (const auto& algo : result.algos) {
    double final_r = algo.mean_reward.empty() ? 0.0 : algo.mean_reward.back();
    double final_c = algo.mean_costs.empty() || algo.mean_costs[0].empty()
                         ? 0.0
                         : algo.mean_costs[0].back();
    bool bounds_ok = true;
    for (const auto& r : algo.runs) bounds_ok = bounds_ok && (r.failed || r.epoch_bound_ok);
    std::cout << algo.name << ": final avg reward " << cmdp::fmt12(final_r) << ", final avg cost "
              << cmdp::fmt12(final_c) << ", epoch bound " << (bounds_ok ? "ok" : "VIOLATED")
              << "\n";
  }
  if (result.failed_runs > 0) {
    std::cerr << result.failed_runs << " run(s) failed; see " << out_dir << "/manifest.txt\n";
    return 3;
  }
  std::cout << "results written to " << out_dir << "\n";
  return 0;
}

int cmd_levels(const std::string& env_name, double budget) {
  const cmdp::TabularEnv env(cmdp::load_env_spec(env_name), budget);
  const auto levels = cmdp::compute_reference_levels(env.model(), budget);
  std::cout << "env " << env_name << " (" << env.num_states() << " states)  budget "
            << cmdp::fmt12(budget) << "\n";
  std::cout << "optimal: reward " << cmdp::fmt12(levels.optimal.reward_rate) << "  cost "
            << cmdp::fmt12(levels.optimal.cost_rates[0]) << "\n";
  std::cout << "fast:    reward " << cmdp::fmt12(levels.fast.reward_rate) << "  cost "
            << cmdp::fmt12(levels.fast.cost_rates[0]) << "\n";
  if (levels.has_safe)
    std::cout << "safe:    reward " << cmdp::fmt12(levels.safe.reward_rate) << "  cost "
              << cmdp::fmt12(levels.safe.cost_rates[0]) << "\n";
  else
    std::cout << "safe:    absent (zero-cost policies are infeasible)\n";
  return 0;
}

int cmd_oracle(const std::string& env_name, double budget) {
  const cmdp::TabularEnv env(cmdp::load_env_spec(env_name), budget);
  const auto sol = cmdp::solve_cmdp(env.model());
  std::cout << "env " << env_name << "  budget " << cmdp::fmt12(budget) << "\n";
  std::cout << "optimal average reward " << cmdp::fmt12(sol.values.reward_rate)
            << ", average cost " << cmdp::fmt12(sol.values.cost_rates[0]) << "\n";
  std::cout << "occupancy measure mu(state, action), states in discovery order:\n";
  std::cout << "state,up,down,right,left\n";
  for (int s = 0; s < env.num_states(); ++s) {
    std::cout << s;
    for (int a = 0; a < env.num_actions(); ++a) std::cout << ',' << cmdp::fmt12(sol.occupancy.mu(s, a));
    std::cout << "\n";
  }
  return 0;
}

int cmd_plot(const std::string& in_dir, std::string out_file) {
  const auto manifest = read_manifest(in_dir + "/manifest.txt");
  const auto need = [&](const std::string& key) {
    auto it = manifest.find(key);
    if (it == manifest.end()) throw cmdp::ConfigError("manifest is missing '" + key + "'");
    return it->second;
  };
  const std::string env_name = need("env");
  const double budget = std::stod(need("budget"));
  const double horizon = std::stod(need("horizon"));

  cmdp::SvgLevels levels;
  const cmdp::TabularEnv env(cmdp::load_env_spec(env_name), budget);
  const auto ref = cmdp::compute_reference_levels(env.model(), budget);
  levels.optimal_reward = ref.optimal.reward_rate;
  levels.fast_reward = ref.fast.reward_rate;
  levels.has_safe = ref.has_safe;
  levels.safe_reward = ref.has_safe ? ref.safe.reward_rate : 0.0;
  levels.optimal_cost = ref.optimal.cost_rates[0];

  std::vector<cmdp::SvgSeries> reward_series, cost_series;
  std::istringstream algos(need("algorithms"));
  std::string name;
  while (std::getline(algos, name, ',')) {
    const std::string path = in_dir + "/" + name + "_aggregate.csv";
    if (!std::ifstream(path)) continue;
    const AggregateCsv agg = read_aggregate(path);
    reward_series.push_back({name, agg.steps, agg.mean_reward, agg.std_reward});
    cost_series.push_back({name, agg.steps, agg.mean_cost, agg.std_cost});
  }
  const std::string svg = cmdp::render_learning_curves(
      env_name + " (budget " + cmdp::fmt12(budget) + ")", horizon, reward_series, cost_series,
      levels);
  if (out_file.empty()) out_file = in_dir + "/curves.svg";
  std::ofstream out(out_file);
  out << svg;
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular constrained-MDP learning benchmark"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment suite from a config file");
  std::string config_path, out_dir = "out";
  int workers = 0;
  bool full_logs = false;
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers, "worker threads (0 = auto)");
  run->add_flag("--full-logs", full_logs, "also write per-step logs");

  auto* levels = app.add_subcommand("levels", "Print optimal/safe/fast reference levels");
  std::string env_name;
  double budget = 0.2;
  levels->add_option("--env", env_name, "environment asset name or path")->required();
  levels->add_option("--budget", budget, "cost budget tau");

  auto* oracle = app.add_subcommand("oracle", "Print the LP optimum and occupancy measure");
  std::string oracle_env;
  double oracle_budget = 0.2;
  oracle->add_option("--env", oracle_env, "environment asset name or path")->required();
  oracle->add_option("--budget", oracle_budget, "cost budget tau");

  auto* plot = app.add_subcommand("plot", "Render learning-curve SVGs from suite output");
  std::string in_dir, out_file;
  plot->add_option("--in", in_dir, "suite output directory")->required();
  plot->add_option("--out", out_file, "output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, workers, full_logs);
    if (*levels) return cmd_levels(env_name, budget);
    if (*oracle) return cmd_oracle(oracle_env, oracle_budget);
    if (*plot) return cmd_plot(in_dir, out_file);
  } catch (const cmdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
