#pragma once

#include <string>
#include <vector>

namespace lica {

// Deterministic SVG line plots: one polyline per series plus an optional
// interquartile band polygon. No external plotting dependency.

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;       // median (or single-run value)
  std::vector<double> lo, hi;  // band bounds; empty -> no band
};

std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series);

}  // namespace lica
