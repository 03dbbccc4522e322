#pragma once

#include <string>
#include <vector>

namespace fradrc::cli {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false;
};

// Polylines with axes, ticks and a legend. Non-finite points break the line.
std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace fradrc::cli
