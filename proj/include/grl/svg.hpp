#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "grl/common.hpp"

namespace grl {

// Minimal native SVG line/scatter plotting: axes, optional log scales,
// legend. No external plotting dependency.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)),
        xlabel_(std::move(xlabel)),
        ylabel_(std::move(ylabel)) {}

  void set_log_x(bool v) { log_x_ = v; }
  void set_log_y(bool v) { log_y_ = v; }

  void add_series(std::string name, std::vector<double> xs,
                  std::vector<double> ys, bool dashed = false) {
    series_.push_back({std::move(name), std::move(xs), std::move(ys), dashed});
  }

  void add_vline(double x, std::string name) {
    vlines_.push_back({x, std::move(name)});
  }

  void render(const std::string& path) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        const double x = tx(s.xs[i]), y = ty(s.ys[i]);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (xmin > xmax) { xmin = 0.0; xmax = 1.0; }
    if (ymin > ymax) { ymin = 0.0; ymax = 1.0; }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double pad_y = 0.05 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const int width = 760, height = 520;
    const int l = 70, r = 160, t = 40, b = 50;
    const auto px = [&](double x) {
      return l + (tx(x) - xmin) / (xmax - xmin) * (width - l - r);
    };
    const auto py = [&](double y) {
      return height - b - (ty(y) - ymin) / (ymax - ymin) * (height - t - b);
    };

    std::ofstream out(path);
    if (!out) throw InvalidInputError("SvgPlot: cannot open " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
        << "' height='" << height << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << width / 2 << "' y='20' text-anchor='middle' "
        << "font-size='15'>" << title_ << "</text>\n";
    // frame
    out << "<rect x='" << l << "' y='" << t << "' width='" << width - l - r
        << "' height='" << height - t - b
        << "' fill='none' stroke='black'/>\n";
    out << "<text x='" << (l + width - r) / 2 << "' y='" << height - 12
        << "' text-anchor='middle' font-size='13'>" << xlabel_
        << (log_x_ ? " (log)" : "") << "</text>\n";
    out << "<text x='18' y='" << (t + height - b) / 2
        << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
        << (t + height - b) / 2 << ")'>" << ylabel_
        << (log_y_ ? " (log)" : "") << "</text>\n";

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
    int ci = 0;
    for (const auto& s : series_) {
      const char* color = colors[ci % 6];
      out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5'";
      if (s.dashed) out << " stroke-dasharray='6,4'";
      out << " points='";
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        const double x = tx(s.xs[i]), y = ty(s.ys[i]);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        out << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
      }
      out << "'/>\n";
      out << "<text x='" << width - r + 10 << "' y='" << t + 18 + 18 * ci
          << "' font-size='12' fill='" << color << "'>" << s.name
          << "</text>\n";
      ++ci;
    }
    for (const auto& v : vlines_) {
      const double x = tx(v.x);
      if (x < xmin || x > xmax) continue;
      out << "<line x1='" << px(v.x) << "' y1='" << t << "' x2='" << px(v.x)
          << "' y2='" << height - b
          << "' stroke='gray' stroke-dasharray='2,3'/>\n";
      out << "<text x='" << px(v.x) + 3 << "' y='" << t + 12
          << "' font-size='11' fill='gray'>" << v.name << "</text>\n";
    }
    out << "</svg>\n";
  }

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
    bool dashed = false;
  };
  struct VLine {
    double x;
    std::string name;
  };

  double tx(double x) const { return log_x_ ? std::log10(x) : x; }
  double ty(double y) const { return log_y_ ? std::log10(y) : y; }

  std::string title_, xlabel_, ylabel_;
  bool log_x_ = false, log_y_ = false;
  std::vector<Series> series_;
  std::vector<VLine> vlines_;
};

}  // namespace grl
