#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Bare scatter plot: points, a frame with tick labels, optional dotted
// horizontal rules (cam corner phases).
struct ScatterPlot {
  std::string title, xlabel, ylabel;
  std::vector<double> x, y;
  std::vector<double> rules;
  bool fixed_y = false;
  double ymin = 0.0, ymax = 1.0;
};

void write_svg(std::ostream& os, const ScatterPlot& p);
