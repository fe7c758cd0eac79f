#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ivlab::harness {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct SvgChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

// Renders a line chart (one polyline per series) as a standalone SVG
// document. No plotting dependency; output is well-formed XML.
std::string render_svg_chart(const SvgChartSpec& spec,
                             const std::vector<SvgSeries>& series);

void write_svg_chart(const SvgChartSpec& spec,
                     const std::vector<SvgSeries>& series,
                     const std::string& path);

}  // namespace ivlab::harness
