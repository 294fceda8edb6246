#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace llmrouter {

/// Minimal static SVG line/scatter emitter for sweep-style figures.
struct SvgSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  bool line = true;
};

std::string render_svg(const std::vector<SvgSeries>& series,
                       const std::string& x_label, const std::string& y_label,
                       int width = 640, int height = 420);

void write_svg(const std::filesystem::path& path,
               const std::vector<SvgSeries>& series, const std::string& x_label,
               const std::string& y_label);

}  // namespace llmrouter
