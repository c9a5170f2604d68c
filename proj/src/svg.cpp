#include "wotlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace wotlab {
namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 64.0, kRight = 616.0, kTop = 44.0, kBottom = 432.0;

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, value);
  return buf;
}

std::string escape_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Mapper {
  PlotAxes axes;
  double y_lo = 0.0, y_hi = 1.0;  // plot-space y range (log10 when log_y)

  explicit Mapper(const PlotAxes& a) : axes(a) {
    if (!(axes.x_max > axes.x_min)) {
      axes.x_min -= 0.5;
      axes.x_max += 0.5;
    }
    if (axes.log_y) {
      if (!(axes.y_min > 0.0) || !(axes.y_max > axes.y_min)) {
        throw std::invalid_argument("svg: log axis needs 0 < y_min < y_max");
      }
      y_lo = std::log10(axes.y_min);
      y_hi = std::log10(axes.y_max);
    } else {
      if (!(axes.y_max > axes.y_min)) {
        axes.y_min -= 0.5;
        axes.y_max += 0.5;
      }
      y_lo = axes.y_min;
      y_hi = axes.y_max;
    }
  }

  double px(double x) const {
    return kLeft + (x - axes.x_min) / (axes.x_max - axes.x_min) * (kRight - kLeft);
  }
  double py(double y) const {
    double v = y;
    if (axes.log_y) v = std::log10(std::max(y, axes.y_min));
    v = (v - y_lo) / (y_hi - y_lo);
    return kBottom - v * (kBottom - kTop);
  }
};

void grow(double v, double& lo, double& hi) {
  if (!std::isfinite(v)) return;
  lo = std::min(lo, v);
  hi = std::max(hi, v);
}

PlotAxes finish_axes(double x_lo, double x_hi, double y_lo, double y_hi,
                     bool log_y) {
  PlotAxes axes;
  axes.log_y = log_y;
  if (x_lo > x_hi) {
    x_lo = 0.0;
    x_hi = 1.0;
  }
  if (y_lo > y_hi) {
    y_lo = log_y ? 1e-6 : 0.0;
    y_hi = 1.0;
  }
  const double x_pad = (x_hi > x_lo) ? 0.05 * (x_hi - x_lo) : 0.5;
  axes.x_min = x_lo - x_pad;
  axes.x_max = x_hi + x_pad;
  if (log_y) {
    axes.y_min = y_lo / 2.0;
    axes.y_max = y_hi * 2.0;
  } else {
    const double y_pad = (y_hi > y_lo) ? 0.05 * (y_hi - y_lo) : 0.5;
    axes.y_min = y_lo - y_pad;
    axes.y_max = y_hi + y_pad;
  }
  return axes;
}

void header(std::string& out) {
  out +=
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
      "viewBox=\"0 0 640 480\">\n"
      "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
}

void frame_and_ticks(std::string& out, const Mapper& map) {
  const PlotAxes& axes = map.axes;
  // Tick positions: 5 linear ticks, or decade ticks on a log axis.
  std::vector<double> x_ticks, y_ticks;
  for (int i = 0; i <= 4; ++i) {
    x_ticks.push_back(axes.x_min + (axes.x_max - axes.x_min) * i / 4.0);
  }
  if (axes.log_y) {
    const int lo = static_cast<int>(std::ceil(std::log10(axes.y_min) - 1e-9));
    const int hi = static_cast<int>(std::floor(std::log10(axes.y_max) + 1e-9));
    int step = 1;
    if (hi - lo > 8) step = (hi - lo + 7) / 8;
    for (int e = lo; e <= hi; e += step) y_ticks.push_back(std::pow(10.0, e));
    if (y_ticks.empty()) y_ticks = {axes.y_min, axes.y_max};
  } else {
    for (int i = 0; i <= 4; ++i) {
      y_ticks.push_back(axes.y_min + (axes.y_max - axes.y_min) * i / 4.0);
    }
  }
  for (double t : x_ticks) {
    const double x = map.px(t);
    out += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", kTop) +
           "\" x2=\"" + fmt("%.2f", x) + "\" y2=\"" + fmt("%.2f", kBottom) +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", kBottom + 18) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\" "
           "text-anchor=\"middle\">" +
           fmt("%.3g", t) + "</text>\n";
  }
  for (double t : y_ticks) {
    const double y = map.py(t);
    out += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", y) +
           "\" x2=\"" + fmt("%.2f", kRight) + "\" y2=\"" + fmt("%.2f", y) +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kLeft - 6) + "\" y=\"" + fmt("%.2f", y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\" "
           "text-anchor=\"end\">" +
           fmt("%.3g", t) + "</text>\n";
  }
  out += "<rect x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", kTop) +
         "\" width=\"" + fmt("%.2f", kRight - kLeft) + "\" height=\"" +
         fmt("%.2f", kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  if (!axes.title.empty()) {
    out += "<text x=\"" + fmt("%.2f", kWidth / 2) +
           "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" "
           "fill=\"#111111\" text-anchor=\"middle\">" +
           escape_text(axes.title) + "</text>\n";
  }
  if (!axes.x_label.empty()) {
    out += "<text x=\"" + fmt("%.2f", (kLeft + kRight) / 2) + "\" y=\"" +
           fmt("%.2f", kHeight - 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\" "
           "text-anchor=\"middle\">" +
           escape_text(axes.x_label) + "</text>\n";
  }
  if (!axes.y_label.empty()) {
    out += "<text x=\"16\" y=\"" + fmt("%.2f", (kTop + kBottom) / 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\" "
           "text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt("%.2f", (kTop + kBottom) / 2) + ")\">" +
           escape_text(axes.y_label) + "</text>\n";
  }
}

void legend(std::string& out, const std::vector<std::string>& labels,
            const std::vector<std::string>& colors) {
  double y = kTop + 14;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) continue;
    out += "<rect x=\"" + fmt("%.2f", kRight - 150) + "\" y=\"" +
           fmt("%.2f", y - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           colors[i] + "\"/>\n";
    out += "<text x=\"" + fmt("%.2f", kRight - 136) + "\" y=\"" + fmt("%.2f", y) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">" +
           escape_text(labels[i]) + "</text>\n";
    y += 16;
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("svg: cannot open " + path);
  file << content;
  if (!file) throw std::runtime_error("svg: write failed for " + path);
}

}  // namespace

PlotAxes auto_axes(const std::vector<ScatterGroup>& groups) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& g : groups) {
    for (Eigen::Index i = 0; i < g.points.rows(); ++i) {
      grow(g.points(i, 0), x_lo, x_hi);
      grow(g.points(i, 1), y_lo, y_hi);
    }
  }
  return finish_axes(x_lo, x_hi, y_lo, y_hi, false);
}

PlotAxes auto_axes(const std::vector<LineSeries>& series, bool log_y) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      const double y = s.y(i);
      if (log_y && !(y > 0.0)) continue;
      grow(s.x(i), x_lo, x_hi);
      grow(y, y_lo, y_hi);
    }
  }
  if (log_y && y_lo > y_hi) {
    y_lo = 1e-9;
    y_hi = 1.0;
  }
  return finish_axes(x_lo, x_hi, y_lo, y_hi, log_y);
}

std::string svg_scatter_to_string(const std::vector<ScatterGroup>& groups,
                                  const PlotAxes& axes) {
  for (const auto& g : groups) {
    if (g.points.cols() != 2 && g.points.rows() != 0) {
      throw std::invalid_argument("svg scatter: groups need n x 2 points");
    }
  }
  Mapper map(axes);
  std::string out;
  header(out);
  frame_and_ticks(out, map);
  std::vector<std::string> labels, colors;
  for (const auto& g : groups) {
    labels.push_back(g.label);
    colors.push_back(g.style.color);
    for (Eigen::Index i = 0; i < g.points.rows(); ++i) {
      const double x = g.points(i, 0), y = g.points(i, 1);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      out += "<circle cx=\"" + fmt("%.2f", map.px(x)) + "\" cy=\"" +
             fmt("%.2f", map.py(y)) + "\" r=\"" + fmt("%.2f", g.style.radius) +
             "\" fill=\"" + g.style.color + "\" fill-opacity=\"" +
             fmt("%.2f", g.style.opacity) + "\"/>\n";
    }
  }
  legend(out, labels, colors);
  out += "</svg>\n";
  return out;
}

std::string svg_lines_to_string(const std::vector<LineSeries>& series,
                                const PlotAxes& axes) {
  Mapper map(axes);
  std::string out;
  header(out);
  frame_and_ticks(out, map);
  std::vector<std::string> labels, colors;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("svg lines: x and y lengths differ");
    }
    labels.push_back(s.label);
    colors.push_back(s.color);
    std::string points;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x(i)) || !std::isfinite(s.y(i))) continue;
      if (!points.empty()) points += ' ';
      points += fmt("%.2f", map.px(s.x(i))) + "," + fmt("%.2f", map.py(s.y(i)));
    }
    if (points.empty()) continue;
    out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" +
           s.color + "\" stroke-width=\"1.5\"/>\n";
  }
  legend(out, labels, colors);
  out += "</svg>\n";
  return out;
}

void write_svg_scatter(const std::string& path,
                       const std::vector<ScatterGroup>& groups,
                       const PlotAxes& axes) {
  write_file(path, svg_scatter_to_string(groups, axes));
}

void write_svg_lines(const std::string& path,
                     const std::vector<LineSeries>& series,
                     const PlotAxes& axes) {
  write_file(path, svg_lines_to_string(series, axes));
}

}  // namespace wotlab
