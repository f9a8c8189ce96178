#pragma once

// Minimal standalone SVG line plots.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace warpflow::plot {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Figure {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
};

// Non-finite points are skipped. Throws if no series has a finite point.
void write_svg(std::ostream& os, const Figure& fig);

}  // namespace warpflow::plot
