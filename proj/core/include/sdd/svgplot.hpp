// Deterministic SVG rendering of sparsity curves. Output bytes depend
// only on the inputs, so plots can be golden-tested and diffed.
#pragma once

#include <string>
#include <vector>

#include "sdd/analyze.hpp"

namespace sdd {

struct PlotOptions {
  std::string title;
  // x axis shows percent of weights remaining, log scale (matches how
  // pruning trajectories are usually read); linear sparsity otherwise.
  bool log_remaining_axis = true;
  // Shade the four phase bands of `verdict` behind the curves.
  bool shade_phases = false;
  SddVerdict verdict;
};

// Renders test accuracy vs sparsity for each curve. labels[i] names
// curves[i] in the legend; sizes must match.
std::string render_curves_svg(const std::vector<SparsityCurve>& curves,
                              const std::vector<std::string>& labels,
                              const PlotOptions& opts);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace sdd
