#pragma once

#include <string>
#include <vector>

namespace sodi {

// Minimal SVG line charts for the convergence study and the trajectory
// overlays; no plotting dependency.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

struct SvgOptions {
  int width = 640;
  int height = 420;
  bool log_x = false;
  bool log_y = false;
  std::string title;
  std::string x_label, y_label;
};

std::string svg_line_chart(const std::vector<SvgSeries>& series,
                           const SvgOptions& opts);

}  // namespace sodi
