#pragma once
// Minimal deterministic SVG plotting: scatter panels and line charts with
// axes, ticks, and legends. Fixed input produces byte-identical files.

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace wotlab {

struct SvgStyle {
  std::string color = "#1f77b4";
  double radius = 2.0;
  double opacity = 0.8;
};

struct ScatterGroup {
  Eigen::MatrixXd points;  // n x 2, columns are (x, y)
  SvgStyle style;
  std::string label;
};

struct PlotAxes {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // requires y_min > 0; values below it are clamped
};

struct LineSeries {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  std::string color = "#1f77b4";
  std::string label;
};

// Axis ranges covering all finite points with 5% padding; [0,1] if empty.
PlotAxes auto_axes(const std::vector<ScatterGroup>& groups);
PlotAxes auto_axes(const std::vector<LineSeries>& series, bool log_y);

std::string svg_scatter_to_string(const std::vector<ScatterGroup>& groups,
                                  const PlotAxes& axes);
std::string svg_lines_to_string(const std::vector<LineSeries>& series,
                                const PlotAxes& axes);

void write_svg_scatter(const std::string& path,
                       const std::vector<ScatterGroup>& groups,
                       const PlotAxes& axes);
void write_svg_lines(const std::string& path,
                     const std::vector<LineSeries>& series,
                     const PlotAxes& axes);

}  // namespace wotlab
