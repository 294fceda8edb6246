#include "llmrouter/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "llmrouter/errors.hpp"

namespace llmrouter {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string render_svg(const std::vector<SvgSeries>& series,
                       const std::string& x_label, const std::string& y_label,
                       int width, int height) {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        xmin = xmax = s.xs[i];
        ymin = ymax = s.ys[i];
        first = false;
      }
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double margin = 50.0;
  const double plot_w = width - 2 * margin;
  const double plot_h = height - 2 * margin;
  const auto px = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * plot_w;
  };
  const auto py = [&](double y) {
    return height - margin - (y - ymin) / (ymax - ymin) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
      << "</text>\n";
  out << "<text x=\"15\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 "
      << height / 2 << ")\">" << y_label << "</text>\n";

  std::size_t color = 0;
  double legend_y = margin;
  for (const auto& s : series) {
    const char* c = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
    ++color;
    if (s.line && s.xs.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        out << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
      }
      out << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      out << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i])
          << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
    }
    out << "<text x=\"" << width - margin - 120 << "\" y=\"" << legend_y
        << "\" font-size=\"11\" fill=\"" << c << "\">" << s.label
        << "</text>\n";
    legend_y += 14.0;
  }
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::filesystem::path& path,
               const std::vector<SvgSeries>& series, const std::string& x_label,
               const std::string& y_label) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write svg file: " + path.string());
  out << render_svg(series, x_label, y_label);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace llmrouter
