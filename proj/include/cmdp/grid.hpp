#pragma once

#include "cmdp/rng.hpp"
#include "cmdp/types.hpp"

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace cmdp {

enum class Cell : char {
  empty = '.',
  wall = '#',
  start = 'S',
  goal = 'G',
  risky = 'R',
};

struct Coord {
  int row = -1;
  int col = -1;
  friend bool operator==(const Coord& a, const Coord& b) {
    return a.row == b.row && a.col == b.col;
  }
  friend bool operator!=(const Coord& a, const Coord& b) { return !(a == b); }
  friend bool operator<(const Coord& a, const Coord& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  }
};

// Actions in the fixed order up, down, right, left.
inline constexpr int kNumActions = 4;
inline constexpr int kRowDelta[kNumActions] = {-1, 1, 0, 0};
inline constexpr int kColDelta[kNumActions] = {0, 0, 1, -1};
// Perpendicular slip directions of each action.
inline constexpr int kPerp[kNumActions][2] = {{3, 2}, {3, 2}, {0, 1}, {0, 1}};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line_, int column_)
      : std::runtime_error("line " + std::to_string(line_) + ", column " +
                           std::to_string(column_) + ": " + what),
        line(line_),
        column(column_) {}
  int line;
  int column;
};

struct GridSpec {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;  // row-major
  double slip_prob = 0.0;
  // Exact decimal value of the header's slip probability; transition rows are
  // assembled from these integers so they sum to one before rounding.
  std::int64_t slip_num = 0;
  std::int64_t slip_den = 1;
  Coord start;

  Cell at(int r, int c) const { return cells[r * width + c]; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  // The outside of the grid behaves like a wall.
  bool wall(int r, int c) const { return !in_bounds(r, c) || at(r, c) == Cell::wall; }
  bool goal(Coord p) const { return at(p.row, p.col) == Cell::goal; }
  bool risky(Coord p) const { return at(p.row, p.col) == Cell::risky; }
  // Corner rule for the pushing-block cost: adjacent to at least two walls.
  bool corner(Coord p) const {
    int walls = 0;
    for (int d = 0; d < kNumActions; ++d)
      walls += wall(p.row + kRowDelta[d], p.col + kColDelta[d]) ? 1 : 0;
    return walls >= 2;
  }
};

struct BoxSpec {
  GridSpec base;  // the box cell itself is empty terrain
  Coord box_start;
};

using EnvSpec = std::variant<GridSpec, BoxSpec>;

namespace detail {

inline void parse_slip(const std::string& token, int line, GridSpec& g) {
  std::int64_t ipart = 0, num = 0, den = 1;
  std::size_t i = 0;
  if (i >= token.size()) throw ParseError("empty slip value", line, 1);
  for (; i < token.size() && token[i] != '.'; ++i) {
    if (token[i] < '0' || token[i] > '9')
      throw ParseError("bad slip value '" + token + "'", line, static_cast<int>(i) + 1);
    ipart = ipart * 10 + (token[i] - '0');
  }
  if (i < token.size() && token[i] == '.') {
    for (++i; i < token.size(); ++i) {
      if (token[i] < '0' || token[i] > '9')
        throw ParseError("bad slip value '" + token + "'", line, static_cast<int>(i) + 1);
      num = num * 10 + (token[i] - '0');
      den *= 10;
    }
  }
  g.slip_num = ipart * den + num;
  g.slip_den = den;
  g.slip_prob = static_cast<double>(g.slip_num) / static_cast<double>(g.slip_den);
  if (g.slip_prob < 0.0 || g.slip_prob >= 1.0)
    throw ParseError("slip probability must lie in [0, 1)", line, 1);
}

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// ASCII grid format: a "slip <prob>" header line, then one row per line with
// '#' wall, '.' empty, 'S' start, 'G' goal, 'R' risky, 'B' box. A 'B' makes
// the result a BoxSpec.
inline EnvSpec parse_grid_spec(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  GridSpec g;
  bool have_header = false;
  std::optional<Coord> start, box;
  int goals = 0;
  std::vector<std::string> rows;

  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      std::istringstream hs(line);
      std::string key, value;
      hs >> key >> value;
      if (key != "slip" || value.empty())
        throw ParseError("expected header 'slip <probability>'", line_no, 1);
      detail::parse_slip(value, line_no, g);
      have_header = true;
      continue;
    }
    if (!rows.empty() && line.size() != rows.front().size())
      throw ParseError("ragged row: expected width " + std::to_string(rows.front().size()),
                       line_no, static_cast<int>(line.size()));
    for (std::size_t c = 0; c < line.size(); ++c) {
      const char ch = line[c];
      const int col = static_cast<int>(c) + 1;
      const int r = static_cast<int>(rows.size());
      switch (ch) {
        case '.': case '#': case 'R': case 'G':
          break;
        case 'S':
          if (start) throw ParseError("duplicate start 'S'", line_no, col);
          start = Coord{r, static_cast<int>(c)};
          break;
        case 'B':
          if (box) throw ParseError("duplicate box 'B'", line_no, col);
          box = Coord{r, static_cast<int>(c)};
          break;
        default:
          throw ParseError(std::string("unknown cell character '") + ch + "'", line_no, col);
      }
      if (ch == 'G') ++goals;
    }
    rows.push_back(line);
  }
  if (!have_header) throw ParseError("missing 'slip' header", line_no, 1);
  if (rows.empty()) throw ParseError("empty grid", line_no, 1);
  if (!start) throw ParseError("no start 'S'", line_no, 1);
  if (goals == 0) throw ParseError("no goal 'G'", line_no, 1);

  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(rows.front().size());
  g.cells.resize(static_cast<std::size_t>(g.width) * g.height, Cell::empty);
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      char ch = rows[r][c];
      if (ch == 'S' || ch == 'B') ch = '.';
      g.cells[r * g.width + c] = static_cast<Cell>(ch);
    }
  g.start = *start;

  if (!box) return g;

  BoxSpec b;
  b.base = std::move(g);
  b.box_start = *box;
  bool any_corner = false;
  for (int r = 0; r < b.base.height && !any_corner; ++r)
    for (int c = 0; c < b.base.width && !any_corner; ++c)
      any_corner = b.base.at(r, c) != Cell::wall && b.base.corner({r, c});
  if (!any_corner) throw ParseError("box grid has no corner cells", line_no, 1);
  if (*box == b.base.start) throw ParseError("box on the start cell", line_no, 1);
  return b;
}

inline std::string to_text(const EnvSpec& spec) {
  const GridSpec& g = std::holds_alternative<GridSpec>(spec)
                          ? std::get<GridSpec>(spec)
                          : std::get<BoxSpec>(spec).base;
  const Coord* box =
      std::holds_alternative<BoxSpec>(spec) ? &std::get<BoxSpec>(spec).box_start : nullptr;
  std::string out = "slip " + detail::format_double(g.slip_prob) + "\n";
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      if (g.start == Coord{r, c})
        out += 'S';
      else if (box && *box == Coord{r, c})
        out += 'B';
      else
        out += static_cast<char>(g.at(r, c));
    }
    out += '\n';
  }
  return out;
}

// Full environment configuration; box coordinates are (-1,-1) for plain grids.
struct EnvState {
  Coord agent;
  Coord box{-1, -1};
};
inline bool operator==(const EnvState& a, const EnvState& b) {
  return a.agent == b.agent && a.box == b.box;
}
inline bool operator<(const EnvState& a, const EnvState& b) {
  return a.agent != b.agent ? a.agent < b.agent : a.box < b.box;
}

namespace detail {

inline const GridSpec& base_of(const EnvSpec& spec) {
  return std::holds_alternative<GridSpec>(spec) ? std::get<GridSpec>(spec)
                                                : std::get<BoxSpec>(spec).base;
}

// Deterministic effect of moving in a direction: walls block, the box is
// pushed when its target cell is free, and any move out of a goal restores
// the initial configuration.
inline EnvState apply_move(const EnvSpec& spec, const EnvState& state, int dir) {
  const GridSpec& g = base_of(spec);
  if (g.goal(state.agent)) {
    EnvState init{g.start, {-1, -1}};
    if (std::holds_alternative<BoxSpec>(spec)) init.box = std::get<BoxSpec>(spec).box_start;
    return init;
  }
  const Coord target{state.agent.row + kRowDelta[dir], state.agent.col + kColDelta[dir]};
  if (g.wall(target.row, target.col)) return state;
  EnvState next = state;
  if (std::holds_alternative<BoxSpec>(spec) && target == state.box) {
    const Coord behind{target.row + kRowDelta[dir], target.col + kColDelta[dir]};
    if (g.wall(behind.row, behind.col)) return state;  // push fails like a wall
    next.box = behind;
  }
  next.agent = target;
  return next;
}

}  // namespace detail

// Enumerated tabular view of a grid environment: exact transition matrices
// for planning oracles plus a sampling simulator driven by the same move
// logic. States are indexed in breadth-first discovery order from the
// initial configuration.
class TabularEnv {
 public:
  TabularEnv(EnvSpec spec, double budget) : spec_(std::move(spec)) {
    enumerate();
    build_model(budget);
  }

  int num_states() const { return static_cast<int>(states_.size()); }
  int num_actions() const { return kNumActions; }
  int initial_state() const { return 0; }
  const EnvSpec& spec() const { return spec_; }
  const Cmdp& model() const { return model_; }
  const EnvState& state_at(int index) const { return states_[index]; }
  int index_of(const EnvState& s) const { return index_.at(s); }
  bool is_box() const { return std::holds_alternative<BoxSpec>(spec_); }

  // One sampled environment step; reward and cost are the realized 0/1
  // signals whose expectations are the model's tables.
  int step(int state, int action, Rng& rng, double& reward, Eigen::VectorXd& cost) const {
    const GridSpec& g = detail::base_of(spec_);
    const EnvState& cur = states_[state];
    int dir = action;
    if (!g.goal(cur.agent) && g.slip_num > 0) {
      const double slip = g.slip_prob;
      const double u = rng.uniform();
      if (u >= 1.0 - slip) dir = kPerp[action][u < 1.0 - slip / 2 ? 0 : 1];
    }
    const EnvState next = detail::apply_move(spec_, cur, dir);
    reward = g.goal(next.agent) ? 1.0 : 0.0;
    cost.resize(1);
    cost[0] = step_cost(cur, next);
    return index_.at(next);
  }

 private:
  double step_cost(const EnvState& cur, const EnvState& next) const {
    const GridSpec& g = detail::base_of(spec_);
    if (is_box()) return g.corner(cur.box) ? 1.0 : 0.0;
    return g.risky(next.agent) ? 1.0 : 0.0;
  }

  void enumerate() {
    const GridSpec& g = detail::base_of(spec_);
    EnvState init{g.start, {-1, -1}};
    if (is_box()) init.box = std::get<BoxSpec>(spec_).box_start;
    states_.push_back(init);
    index_[init] = 0;
    for (std::size_t head = 0; head < states_.size(); ++head) {
      const EnvState cur = states_[head];
      for (int dir = 0; dir < kNumActions; ++dir) {
        const EnvState next = detail::apply_move(spec_, cur, dir);
        if (index_.emplace(next, static_cast<int>(states_.size())).second) {
          states_.push_back(next);
          if (states_.size() > 100000)
            throw std::runtime_error("grid environment exceeds 100000 states");
        }
      }
    }
  }

  // Rows are accumulated as integer multiples of 1/(2*slip_den) and rounded
  // once; a final correction pins each row sum to exactly 1.0.
  void build_model(double budget) {
    const GridSpec& g = detail::base_of(spec_);
    const int S = num_states();
    const std::int64_t den2 = 2 * g.slip_den;

    model_.num_states = S;
    model_.num_actions = kNumActions;
    model_.num_constraints = 1;
    model_.transitions.assign(kNumActions, Eigen::MatrixXd::Zero(S, S));
    model_.reward = Eigen::MatrixXd::Zero(S, kNumActions);
    model_.costs.assign(1, Eigen::MatrixXd::Zero(S, kNumActions));
    model_.thresholds = Eigen::VectorXd::Constant(1, budget);
    model_.initial_dist = Eigen::VectorXd::Zero(S);
    model_.initial_dist[0] = 1.0;

    for (int s = 0; s < S; ++s) {
      const EnvState& cur = states_[s];
      const bool at_goal = g.goal(cur.agent);
      for (int a = 0; a < kNumActions; ++a) {
        std::map<int, std::int64_t> weight;
        if (at_goal || g.slip_num == 0) {
          weight[index_.at(detail::apply_move(spec_, cur, a))] = den2;
        } else {
          weight[index_.at(detail::apply_move(spec_, cur, a))] += 2 * (g.slip_den - g.slip_num);
          weight[index_.at(detail::apply_move(spec_, cur, kPerp[a][0]))] += g.slip_num;
          weight[index_.at(detail::apply_move(spec_, cur, kPerp[a][1]))] += g.slip_num;
        }
        std::int64_t reward_w = 0, risky_w = 0;
        for (const auto& [next, w] : weight) {
          model_.transitions[a](s, next) = static_cast<double>(w) / static_cast<double>(den2);
          if (g.goal(states_[next].agent)) reward_w += w;
          if (!is_box() && g.risky(states_[next].agent)) risky_w += w;
        }
        normalize_row_exact(model_.transitions[a], s);
        model_.reward(s, a) = static_cast<double>(reward_w) / static_cast<double>(den2);
        model_.costs[0](s, a) = is_box() ? (g.corner(cur.box) ? 1.0 : 0.0)
                                         : static_cast<double>(risky_w) / static_cast<double>(den2);
      }
    }
  }

  static void normalize_row_exact(Eigen::MatrixXd& m, int row) {
    for (int tries = 0; tries < 8; ++tries) {
      const double sum = m.row(row).sum();
      if (sum == 1.0) return;
      int arg = 0;
      m.row(row).maxCoeff(&arg);
      m(row, arg) -= sum - 1.0;
    }
  }

  EnvSpec spec_;
  std::vector<EnvState> states_;
  std::map<EnvState, int> index_;
  Cmdp model_;
};

// Exact CMDP of a grid spec with budget tau.
inline Cmdp true_cmdp(const EnvSpec& spec, double budget) {
  return TabularEnv(spec, budget).model();
}

}  // namespace cmdp
