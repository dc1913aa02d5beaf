#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace cmdp {

struct SvgSeries {
  std::string name;
  std::vector<double> steps;
  std::vector<double> mean;
  std::vector<double> dev;
};

struct SvgLevels {
  double optimal_reward = 0.0;
  double fast_reward = 0.0;
  double safe_reward = 0.0;
  bool has_safe = false;
  double optimal_cost = 0.0;
};

namespace svg_detail {

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  return palette[i % 5];
}

struct Panel {
  double x0, y0, w, h;
  double xmax, ymax;
  double X(double x) const { return x0 + (xmax > 0 ? x / xmax : 0.0) * w; }
  double Y(double y) const { return y0 + h - (ymax > 0 ? y / ymax : 0.0) * h; }
};

inline void hline(std::string& out, const Panel& p, double level, const char* dash,
                  const std::string& label) {
  const std::string y = px(p.Y(level));
  out += "<line x1=\"" + px(p.x0) + "\" y1=\"" + y + "\" x2=\"" + px(p.x0 + p.w) + "\" y2=\"" + y +
         "\" stroke=\"#444444\" stroke-dasharray=\"" + dash + "\"/>\n";
  out += "<text x=\"" + px(p.x0 + p.w + 4) + "\" y=\"" + y + "\" font-size=\"10\">" + label +
         "</text>\n";
}

inline void draw_panel(std::string& out, Panel& p, const std::string& title,
                       const std::vector<SvgSeries>& series,
                       const std::vector<std::pair<double, std::string>>& dashed,
                       const std::vector<std::pair<double, std::string>>& dotted) {
  double ymax = 1e-9;
  for (const auto& [lvl, name] : dashed) ymax = std::max(ymax, lvl);
  for (const auto& [lvl, name] : dotted) ymax = std::max(ymax, lvl);
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.mean.size(); ++i) ymax = std::max(ymax, s.mean[i] + s.dev[i]);
  p.ymax = 1.15 * ymax;

  out += "<rect x=\"" + px(p.x0) + "\" y=\"" + px(p.y0) + "\" width=\"" + px(p.w) +
         "\" height=\"" + px(p.h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + px(p.x0) + "\" y=\"" + px(p.y0 - 8) + "\" font-size=\"13\">" + title +
         "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = p.xmax * i / 4.0;
    const double yv = p.ymax * i / 4.0;
    out += "<line x1=\"" + px(p.X(xv)) + "\" y1=\"" + px(p.y0 + p.h) + "\" x2=\"" + px(p.X(xv)) +
           "\" y2=\"" + px(p.y0 + p.h + 4) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + px(p.X(xv)) + "\" y=\"" + px(p.y0 + p.h + 16) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
    out += "<text x=\"" + px(p.x0 - 6) + "\" y=\"" + px(p.Y(yv) + 3) +
           "\" font-size=\"10\" text-anchor=\"end\">" + num(yv) + "</text>\n";
  }
  for (const auto& [lvl, name] : dashed) hline(out, p, lvl, "6,4", name);
  for (const auto& [lvl, name] : dotted) hline(out, p, lvl, "2,3", name);

  if (series.empty()) {
    out += "<text x=\"" + px(p.x0 + p.w / 2) + "\" y=\"" + px(p.y0 + p.h / 2) +
           "\" font-size=\"12\" text-anchor=\"middle\">absent</text>\n";
    return;
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    if (s.steps.empty()) continue;
    std::string band = "<polygon fill=\"" + std::string(color(si)) +
                       "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      band += px(p.X(s.steps[i])) + "," + px(p.Y(s.mean[i] + s.dev[i])) + " ";
    for (std::size_t i = s.steps.size(); i-- > 0;)
      band += px(p.X(s.steps[i])) + "," + px(p.Y(std::max(0.0, s.mean[i] - s.dev[i]))) + " ";
    band += "\"/>\n";
    out += band;
    std::string line = "<polyline fill=\"none\" stroke=\"" + std::string(color(si)) +
                       "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      line += px(p.X(s.steps[i])) + "," + px(p.Y(s.mean[i])) + " ";
    line += "\"/>\n";
    out += line;
    out += "<text x=\"" + px(p.x0 + 8) + "\" y=\"" + px(p.y0 + 14 + 13 * si) +
           "\" font-size=\"11\" fill=\"" + color(si) + "\">" + s.name + "</text>\n";
  }
}

}  // namespace svg_detail

// Two stacked panels (average reward above, average cost below) with mean
// curves, +-1 std bands, a dashed optimal level and dotted safe/fast levels.
// Plain SVG text, no renderer dependency.
inline std::string render_learning_curves(const std::string& title, double horizon,
                                          const std::vector<SvgSeries>& reward_series,
                                          const std::vector<SvgSeries>& cost_series,
                                          const SvgLevels& levels) {
  using namespace svg_detail;
  const double width = 780, height = 820;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) +
                    "\" height=\"" + px(height) + "\" font-family=\"sans-serif\">\n";
  out += "<text x=\"390\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">" + title +
         "</text>\n";

  Panel top{70, 50, 620, 320, horizon, 1};
  std::vector<std::pair<double, std::string>> dashed = {{levels.optimal_reward, "optimal"}};
  std::vector<std::pair<double, std::string>> dotted = {{levels.fast_reward, "fast"}};
  if (levels.has_safe) dotted.push_back({levels.safe_reward, "safe"});
  draw_panel(out, top, "average reward", reward_series, dashed, dotted);

  Panel bottom{70, 440, 620, 320, horizon, 1};
  draw_panel(out, bottom, "average cost", cost_series, {{levels.optimal_cost, "optimal"}}, {});

  out += "</svg>\n";
  return out;
}

}  // namespace cmdp
