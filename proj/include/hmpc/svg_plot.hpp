#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hmpc/sim_harness.hpp"

namespace hmpc {

struct PlotSeries {
  std::string label;
  std::string color = "#000000";
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the polyline (gap)
};

// Minimal deterministic SVG line plot (no external dependencies).
std::string render_svg(const std::string& title, const std::vector<PlotSeries>& series,
                       int width = 900, int height = 480);

void write_svg(const std::string& path, const std::string& title,
               const std::vector<PlotSeries>& series);

// The five standard figures for a closed-loop log. Returns the file names.
std::vector<std::string> emit_standard_plots(const SimLog& log, const std::string& out_dir);

}  // namespace hmpc
