#include "ivlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ivlab/errors.hpp"

namespace ivlab::harness {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

std::string render_svg_chart(const SvgChartSpec& spec,
                             const std::vector<SvgSeries>& series) {
  const double ml = 64, mr = 16, mt = 34, mb = 46;
  const double pw = spec.width - ml - mr;
  const double ph = spec.height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (spec.log_y && y <= 0.0) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      const double yv = spec.log_y ? std::log10(y) : y;
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  }
  if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
  if (!(ymax > ymin)) { ymin -= 0.5; ymax += 0.5; }
  if (!std::isfinite(xmin) || !std::isfinite(ymin)) {
    xmin = 0; xmax = 1; ymin = 0; ymax = 1;
  }

  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    const double yv = spec.log_y ? std::log10(y) : y;
    return mt + (1.0 - (yv - ymin) / (ymax - ymin)) * ph;
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
      << ' ' << spec.height << "\">\n"
      << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">"
      << escape_xml(spec.title) << "</text>\n";

  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";

  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / ticks;
    const double gx = px(fx);
    svg << "<line x1=\"" << gx << "\" y1=\"" << mt + ph << "\" x2=\"" << gx
        << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << gx << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"10\">" << fmt(fx) << "</text>\n";
    const double fy = ymin + (ymax - ymin) * i / ticks;
    const double gy = mt + (1.0 - static_cast<double>(i) / ticks) * ph;
    const double label = spec.log_y ? std::pow(10.0, fy) : fy;
    svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << gy << "\" x2=\"" << ml
        << "\" y2=\"" << gy << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << ml - 7 << "\" y=\"" << gy + 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"10\">" << fmt(label) << "</text>\n";
  }

  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << spec.height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" << escape_xml(spec.x_label) << "</text>\n"
      << "<text x=\"14\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 14 " << mt + ph / 2 << ")\">"
      << escape_xml(spec.y_label) << "</text>\n";

  std::size_t color_idx = 0;
  double legend_y = mt + 10;
  for (const auto& s : series) {
    const char* color = kPalette[color_idx % (sizeof(kPalette) / sizeof(kPalette[0]))];
    ++color_idx;
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (spec.log_y && y <= 0.0) continue;
      if (!first) svg << ' ';
      svg << fmt(px(x)) << ',' << fmt(py(y));
      first = false;
    }
    svg << "\"/>\n";
    svg << "<line x1=\"" << ml + pw - 110 << "\" y1=\"" << legend_y
        << "\" x2=\"" << ml + pw - 92 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n"
        << "<text x=\"" << ml + pw - 88 << "\" y=\"" << legend_y + 3
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(s.label) << "</text>\n";
    legend_y += 14;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg_chart(const SvgChartSpec& spec,
                     const std::vector<SvgSeries>& series,
                     const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("write_svg_chart: cannot open '" + path + "'");
  file << render_svg_chart(spec, series);
  if (!file) throw IoError("write_svg_chart: write failed for '" + path + "'");
}

}  // namespace ivlab::harness
