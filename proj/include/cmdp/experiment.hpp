#pragma once

#include "cmdp/agents.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#ifndef CMDP_ASSET_DIR
#define CMDP_ASSET_DIR "assets"
#endif

namespace cmdp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-width decimal with 12 significant digits; used for every number the
// harness persists so identical inputs give identical bytes.
inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string find_asset(const std::string& name) {
  namespace fs = std::filesystem;
  const bool is_path = name.find('/') != std::string::npos ||
                       (name.size() > 5 && name.compare(name.size() - 5, 5, ".grid") == 0);
  if (is_path) {
    if (fs::exists(name)) return name;
    throw ConfigError("environment file not found: " + name);
  }
  for (const char* dir : {"assets", CMDP_ASSET_DIR}) {
    const std::string candidate = std::string(dir) + "/" + name + ".grid";
    if (fs::exists(candidate)) return candidate;
  }
  throw ConfigError("unknown environment '" + name + "' (no " + name + ".grid found)");
}

inline EnvSpec load_env_spec(const std::string& name_or_path) {
  const std::string path = find_asset(name_or_path);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_grid_spec(buf.str());
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct AlgoSpec {
  std::string name;
  AgentConfig config;
};

struct ExperimentConfig {
  std::string env;
  double budget = 0.2;
  std::int64_t horizon = 0;
  int runs = 1;
  std::uint64_t base_seed = 1;
  int checkpoints = 128;
  std::vector<AlgoSpec> algorithms;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("bad numeric value for '" + key + "': " + v);
  }
}

inline std::int64_t to_int(const std::string& v, const std::string& key) {
  const double d = to_double(v, key);
  const auto i = static_cast<std::int64_t>(d);
  if (static_cast<double>(i) != d) throw ConfigError("expected integer for '" + key + "': " + v);
  return i;
}

inline void apply_agent_key(AgentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "bonus_coef") cfg.bonus_coef = to_double(value, key);
  else if (key == "eta") cfg.eta = to_double(value, key);
  else if (key == "gamma") cfg.vi_discount = to_double(value, key);
  else if (key == "vi_tolerance") cfg.vi_tolerance = to_double(value, key);
  else if (key == "vi_max_iter") cfg.vi_max_iter = static_cast<int>(to_int(value, key));
  else if (key == "h") cfg.conservative_h = static_cast<int>(to_int(value, key));
  else if (key == "alpha") cfg.fixed_alpha = to_double(value, key);
  else if (key == "bilinear_max_iter") cfg.bilinear_max_iter = static_cast<int>(to_int(value, key));
  else throw ConfigError("unknown agent setting '" + key + "'");
}

}  // namespace detail

// Key-value experiment file: global `key = value` lines, `algorithms` as a
// comma list, and one optional `[algorithm_name]` section per algorithm for
// its settings. Lines starting with ';' are comments.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, AgentConfig*> sections;
  AgentConfig* current = nullptr;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> algo_names;

  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      auto it = sections.find(name);
      if (it == sections.end())
        throw ConfigError("line " + std::to_string(line_no) + ": section [" + name +
                          "] does not match a listed algorithm");
      current = it->second;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (current) {
      detail::apply_agent_key(*current, key, value);
      continue;
    }
    if (key == "env") cfg.env = value;
    else if (key == "budget") cfg.budget = detail::to_double(value, key);
    else if (key == "horizon") cfg.horizon = detail::to_int(value, key);
    else if (key == "runs") cfg.runs = static_cast<int>(detail::to_int(value, key));
    else if (key == "base_seed") cfg.base_seed = static_cast<std::uint64_t>(detail::to_int(value, key));
    else if (key == "checkpoints") cfg.checkpoints = static_cast<int>(detail::to_int(value, key));
    else if (key == "algorithms") {
      std::istringstream as(value);
      std::string tok;
      while (std::getline(as, tok, ',')) {
        tok = detail::trim(tok);
        if (tok.empty()) continue;
        AlgoSpec spec;
        spec.name = tok;
        try {
          spec.config.algorithm = parse_algorithm(tok);
        } catch (const std::invalid_argument& e) {
          throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
        cfg.algorithms.push_back(spec);
        algo_names.push_back(tok);
      }
      for (auto& a : cfg.algorithms) sections[a.name] = &a.config;
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (cfg.env.empty()) throw ConfigError("config is missing 'env'");
  if (cfg.horizon < 1) throw ConfigError("config needs horizon >= 1");
  if (cfg.runs < 1) throw ConfigError("config needs runs >= 1");
  if (cfg.budget < 0.0 || cfg.budget > 1.0) throw ConfigError("budget must lie in [0, 1]");
  if (cfg.algorithms.empty()) throw ConfigError("config lists no algorithms");
  return cfg;
}

inline std::string canonical_config_text(const ExperimentConfig& cfg) {
  std::string s = "env=" + cfg.env + ";budget=" + fmt12(cfg.budget) +
                  ";horizon=" + std::to_string(cfg.horizon) + ";runs=" + std::to_string(cfg.runs) +
                  ";base_seed=" + std::to_string(cfg.base_seed) +
                  ";checkpoints=" + std::to_string(cfg.checkpoints);
  for (const auto& a : cfg.algorithms) {
    const AgentConfig& c = a.config;
    s += ";" + a.name + "{" + fmt12(c.bonus_coef) + "," + fmt12(c.eta) + "," +
         fmt12(c.vi_discount) + "," + fmt12(c.vi_tolerance) + "," + std::to_string(c.vi_max_iter) +
         "," + std::to_string(c.conservative_h) + "," + fmt12(c.fixed_alpha) + "," +
         std::to_string(c.bilinear_max_iter) + "}";
  }
  return s;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char ch : canonical_config_text(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ReferenceLevels {
  AverageValues optimal;
  AverageValues fast;
  AverageValues safe;
  bool has_safe = false;
};

// Dashed/dotted reference lines of the learning-curve plots: the LP optimum
// at the configured budget, at a relaxed budget of 1 (fast), and at budget 0
// (safe; absent when some cost is unavoidable).
inline ReferenceLevels compute_reference_levels(const Cmdp& model, double budget) {
  ReferenceLevels out;
  Cmdp work = model;
  work.thresholds.setConstant(budget);
  out.optimal = solve_cmdp(work).values;
  work.thresholds.setConstant(1.0);
  out.fast = solve_cmdp(work).values;
  work.thresholds.setConstant(0.0);
  try {
    out.safe = solve_cmdp(work).values;
    out.has_safe = true;
  } catch (const InfeasibleError&) {
    out.has_safe = false;
  }
  return out;
}

inline std::vector<std::int64_t> checkpoint_steps(std::int64_t horizon, int count) {
  std::vector<std::int64_t> steps;
  if (horizon <= count) {
    for (std::int64_t t = 1; t <= horizon; ++t) steps.push_back(t);
    return steps;
  }
  const double lo = 0.0, hi = std::log(static_cast<double>(horizon));
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
    const auto t = static_cast<std::int64_t>(std::llround(std::exp(lo + f * (hi - lo))));
    if (steps.empty() || t > steps.back()) steps.push_back(t);
  }
  if (steps.back() != horizon) steps.push_back(horizon);
  return steps;
}

struct RunSeries {
  std::uint64_t seed = 0;
  std::vector<double> avg_reward;               // at the suite's checkpoints
  std::vector<std::vector<double>> avg_costs;   // channel -> series
  std::int64_t num_epochs = 0;
  double epoch_bound = 0.0;
  bool epoch_bound_ok = true;
  int fallback_events = 0;
  int planner_warnings = 0;
  bool failed = false;
  std::string error;
};

struct AlgoSeries {
  std::string name;
  std::vector<RunSeries> runs;
  std::vector<double> mean_reward, std_reward;
  std::vector<std::vector<double>> mean_costs, std_costs;  // channel -> series
};

struct SuiteResult {
  std::vector<std::int64_t> checkpoints;
  std::vector<AlgoSeries> algos;
  ReferenceLevels levels;
  int failed_runs = 0;
  int num_cost_channels = 1;
};

namespace detail {

inline void aggregate_algo(AlgoSeries& algo, std::size_t num_checkpoints, int channels) {
  algo.mean_reward.assign(num_checkpoints, 0.0);
  algo.std_reward.assign(num_checkpoints, 0.0);
  algo.mean_costs.assign(channels, std::vector<double>(num_checkpoints, 0.0));
  algo.std_costs.assign(channels, std::vector<double>(num_checkpoints, 0.0));
  std::vector<const RunSeries*> ok;
  for (const auto& r : algo.runs)
    if (!r.failed) ok.push_back(&r);
  if (ok.empty()) return;
  const double n = static_cast<double>(ok.size());
  for (std::size_t i = 0; i < num_checkpoints; ++i) {
    double sum = 0.0;
    for (auto* r : ok) sum += r->avg_reward[i];
    const double mean = sum / n;
    double var = 0.0;
    for (auto* r : ok) var += (r->avg_reward[i] - mean) * (r->avg_reward[i] - mean);
    algo.mean_reward[i] = mean;
    algo.std_reward[i] = std::sqrt(var / n);
    for (int c = 0; c < channels; ++c) {
      double cs = 0.0;
      for (auto* r : ok) cs += r->avg_costs[c][i];
      const double cmean = cs / n;
      double cvar = 0.0;
      for (auto* r : ok) cvar += (r->avg_costs[c][i] - cmean) * (r->avg_costs[c][i] - cmean);
      algo.mean_costs[c][i] = cmean;
      algo.std_costs[c][i] = std::sqrt(cvar / n);
    }
  }
}

inline void write_full_log(const std::string& path, const MetricsLog& log) {
  std::ofstream out(path);
  out << "t,state,action,reward";
  for (std::size_t c = 0; c < log.costs.size(); ++c) out << ",cost_" << c + 1;
  out << ",epoch\n";
  for (std::size_t t = 0; t < log.rewards.size(); ++t) {
    out << t + 1 << ',' << log.states[t] << ',' << log.actions[t] << ',' << fmt12(log.rewards[t]);
    for (std::size_t c = 0; c < log.costs.size(); ++c) out << ',' << fmt12(log.costs[c][t]);
    out << ',' << log.epoch_of_step[t] << '\n';
  }
}

}  // namespace detail

// Executes runs x algorithms (parallel across runs), persists per-run and
// aggregate CSVs plus a manifest, and checks the epoch-count bound on every
// run. Partial failures are recorded and do not stop the suite.
inline SuiteResult run_suite(const ExperimentConfig& cfg, const std::string& out_dir,
                             int workers = 0, bool full_logs = false) {
  namespace fs = std::filesystem;
  const EnvSpec spec = load_env_spec(cfg.env);
  const TabularEnv env(spec, cfg.budget);
  fs::create_directories(out_dir);

  SuiteResult result;
  result.checkpoints = checkpoint_steps(cfg.horizon, cfg.checkpoints);
  result.num_cost_channels = env.model().num_constraints;
  result.levels = compute_reference_levels(env.model(), cfg.budget);
  result.algos.resize(cfg.algorithms.size());
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
    result.algos[i].name = cfg.algorithms[i].name;
    result.algos[i].runs.resize(cfg.runs);
  }

  struct Task {
    std::size_t algo;
    int run;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i)
    for (int j = 0; j < cfg.runs; ++j) tasks.push_back({i, j});

  const int channels = result.num_cost_channels;
  auto execute = [&](const Task& task) {
    RunSeries& series = result.algos[task.algo].runs[task.run];
    series.seed = cfg.base_seed + static_cast<std::uint64_t>(task.run);
    try {
      const MetricsLog log =
          run_agent(env, cfg.algorithms[task.algo].config, cfg.horizon, series.seed);
      const std::vector<double> avg_r = running_average(log.rewards);
      series.avg_reward.reserve(result.checkpoints.size());
      series.avg_costs.assign(channels, {});
      std::vector<std::vector<double>> avg_c(channels);
      for (int c = 0; c < channels; ++c) avg_c[c] = running_average(log.costs[c]);
      for (const std::int64_t t : result.checkpoints) {
        series.avg_reward.push_back(avg_r[t - 1]);
        for (int c = 0; c < channels; ++c) series.avg_costs[c].push_back(avg_c[c][t - 1]);
      }
      series.num_epochs = log.num_epochs;
      series.epoch_bound = epoch_count_bound(log.num_states, log.num_actions, log.horizon());
      series.epoch_bound_ok = static_cast<double>(log.num_epochs) <= series.epoch_bound;
      series.fallback_events = log.fallback_events;
      series.planner_warnings = log.planner_warnings;
      if (full_logs)
        detail::write_full_log(out_dir + "/" + result.algos[task.algo].name + "_run" +
                                   std::to_string(task.run) + "_full.csv",
                               log);
    } catch (const std::exception& e) {
      series.failed = true;
      series.error = e.what();
    }
  };

  if (workers <= 0)
    workers = static_cast<int>(std::min<unsigned>(8, std::max(1u, std::thread::hardware_concurrency())));
  if (workers <= 1 || tasks.size() <= 1) {
    for (const auto& t : tasks) execute(t);
  } else {
    std::atomic<std::size_t> head{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = head.fetch_add(1);
          if (i >= tasks.size()) return;
          execute(tasks[i]);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (auto& algo : result.algos) {
    detail::aggregate_algo(algo, result.checkpoints.size(), channels);
    for (const auto& r : algo.runs) result.failed_runs += r.failed ? 1 : 0;
  }

  // Per-run CSVs: running averages at the checkpoints.
  for (std::size_t i = 0; i < result.algos.size(); ++i) {
    const AlgoSeries& algo = result.algos[i];
    for (int j = 0; j < cfg.runs; ++j) {
      std::ofstream out(out_dir + "/" + algo.name + "_run" + std::to_string(j) + ".csv");
      out << "step,avg_reward";
      for (int c = 0; c < channels; ++c) out << ",avg_cost_" << c + 1;
      out << '\n';
      const RunSeries& r = algo.runs[j];
      if (r.failed) continue;
      for (std::size_t k = 0; k < result.checkpoints.size(); ++k) {
        out << result.checkpoints[k] << ',' << fmt12(r.avg_reward[k]);
        for (int c = 0; c < channels; ++c) out << ',' << fmt12(r.avg_costs[c][k]);
        out << '\n';
      }
    }
    std::ofstream out(out_dir + "/" + algo.name + "_aggregate.csv");
    out << "step,mean_avg_reward,std_avg_reward";
    for (int c = 0; c < channels; ++c)
      out << ",mean_avg_cost_" << c + 1 << ",std_avg_cost_" << c + 1;
    out << '\n';
    for (std::size_t k = 0; k < result.checkpoints.size(); ++k) {
      out << result.checkpoints[k] << ',' << fmt12(algo.mean_reward[k]) << ','
          << fmt12(algo.std_reward[k]);
      for (int c = 0; c < channels; ++c)
        out << ',' << fmt12(algo.mean_costs[c][k]) << ',' << fmt12(algo.std_costs[c][k]);
      out << '\n';
    }
  }

  std::ofstream man(out_dir + "/manifest.txt");
  man << "artifact = cmdp-lab 0.1.0\n";
  man << "config_hash = " << config_hash(cfg) << '\n';
  man << "env = " << cfg.env << '\n';
  man << "budget = " << fmt12(cfg.budget) << '\n';
  man << "horizon = " << cfg.horizon << '\n';
  man << "runs = " << cfg.runs << '\n';
  man << "base_seed = " << cfg.base_seed << '\n';
  {
    std::string joined;
    for (const auto& a : cfg.algorithms) joined += (joined.empty() ? "" : ",") + a.name;
    man << "algorithms = " << joined << '\n';
  }
  man << "optimal_reward = " << fmt12(result.levels.optimal.reward_rate) << '\n';
  man << "optimal_cost = " << fmt12(result.levels.optimal.cost_rates[0]) << '\n';
  man << "fast_reward = " << fmt12(result.levels.fast.reward_rate) << '\n';
  man << "safe_reward = "
      << (result.levels.has_safe ? fmt12(result.levels.safe.reward_rate) : std::string("absent"))
      << '\n';
  for (const auto& algo : result.algos)
    for (std::size_t j = 0; j < algo.runs.size(); ++j) {
      const RunSeries& r = algo.runs[j];
      man << "run " << algo.name << ' ' << j << ": seed=" << r.seed << " epochs=" << r.num_epochs
          << " epoch_bound=" << fmt12(r.epoch_bound) << " bound_ok=" << (r.epoch_bound_ok ? 1 : 0)
          << " fallbacks=" << r.fallback_events << " warnings=" << r.planner_warnings
          << " failed=" << (r.failed ? 1 : 0) << '\n';
    }
  return result;
}

}  // namespace cmdp
