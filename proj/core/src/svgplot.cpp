#include "sdd/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sdd/error.hpp"

namespace sdd {
namespace {

constexpr double kWidth = 860.0, kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 840.0, kTop = 46.0, kBottom = 464.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
const char* kBands[] = {"#dce9f5", "#fbe3e3", "#e2f2e2", "#efefef"};

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

struct Axis {
  bool log_remaining;
  double lo, hi;  // transformed data range mapped onto [kLeft, kRight]

  double transform(double sparsity) const {
    if (!log_remaining) return sparsity;
    double remaining = std::max(1.0 - sparsity, 1e-9) * 100.0;
    return std::log10(remaining);
  }
  double x(double sparsity) const {
    double t = transform(sparsity);
    // Dense (high remaining) on the left when the axis is logarithmic.
    double unit = (t - lo) / (hi - lo);
    if (log_remaining) unit = 1.0 - unit;
    return kLeft + unit * (kRight - kLeft);
  }
};

}  // namespace

std::string render_curves_svg(const std::vector<SparsityCurve>& curves,
                              const std::vector<std::string>& labels,
                              const PlotOptions& opts) {
  if (curves.empty()) throw InputError("plot needs at least one curve");
  if (labels.size() != curves.size())
    throw InputError("plot labels must match curves one to one");
  for (const SparsityCurve& c : curves) {
    c.validate();
    if (c.points.empty()) throw InputError("plot curve has no points");
  }
  if (opts.shade_phases && opts.verdict.phases.empty())
    throw InputError("phase shading requested but the verdict has no phases");

  Axis ax{opts.log_remaining_axis, 0.0, 0.0};
  double tmin = 1e300, tmax = -1e300;
  double amin = 1e300, amax = -1e300;
  for (const SparsityCurve& c : curves)
    for (const CurvePoint& p : c.points) {
      double t = ax.transform(p.sparsity);
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
      amin = std::min(amin, p.test_acc);
      amax = std::max(amax, p.test_acc);
    }
  if (tmax - tmin < 1e-12) {
    tmin -= 0.5;
    tmax += 0.5;
  }
  ax.lo = tmin;
  ax.hi = tmax;
  double pad = std::max(0.01, (amax - amin) * 0.08);
  double ylo = std::max(0.0, amin - pad);
  double yhi = std::min(1.0, amax + pad);
  if (yhi - ylo < 1e-9) yhi = ylo + 1e-9;
  auto ypix = [&](double acc) {
    return kBottom - (acc - ylo) / (yhi - ylo) * (kBottom - kTop);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fg(kWidth) +
         "\" height=\"" + fg(kHeight) + "\" viewBox=\"0 0 " + fg(kWidth) +
         " " + fg(kHeight) + "\">\n";
  svg += "<!-- accuracy vs sparsity; deterministic output -->\n";
  svg += "<rect width=\"" + fg(kWidth) + "\" height=\"" + fg(kHeight) +
         "\" fill=\"#ffffff\"/>\n";

  if (opts.shade_phases) {
    const std::vector<PhaseRange>& ph = opts.verdict.phases;
    const std::vector<CurvePoint>& pts = curves.front().points;
    size_t n_bands = std::min<size_t>(ph.size(), 4);
    std::vector<double> edges(n_bands + 1);
    edges[0] = kLeft;
    edges[n_bands] = kRight;
    for (size_t b = 1; b < n_bands; ++b) {
      int prev_last = ph[b - 1].last;
      int first = ph[b].first;
      if (prev_last < 0 || first < 0 ||
          static_cast<size_t>(first) >= pts.size() ||
          static_cast<size_t>(prev_last) >= pts.size())
        throw InputError("phase ranges fall outside the plotted curve");
      edges[b] = 0.5 * (ax.x(pts[prev_last].sparsity) +
                        ax.x(pts[first].sparsity));
    }
    for (size_t b = 0; b < n_bands; ++b)
      svg += "<rect x=\"" + f2(edges[b]) + "\" y=\"" + f2(kTop) +
             "\" width=\"" + f2(edges[b + 1] - edges[b]) + "\" height=\"" +
             f2(kBottom - kTop) + "\" fill=\"" + kBands[b] + "\"/>\n";
  }

  // y grid + labels: five evenly spaced ticks.
  for (int i = 0; i <= 4; ++i) {
    double acc = ylo + (yhi - ylo) * i / 4.0;
    double y = ypix(acc);
    svg += "<line x1=\"" + f2(kLeft) + "\" y1=\"" + f2(y) + "\" x2=\"" +
           f2(kRight) + "\" y2=\"" + f2(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    char lbl[32];
    std::snprintf(lbl, sizeof lbl, "%.3f", acc);
    svg += "<text x=\"" + f2(kLeft - 8.0) + "\" y=\"" + f2(y + 4.0) +
           "\" font-family=\"monospace\" font-size=\"12\" "
           "text-anchor=\"end\">" +
           lbl + "</text>\n";
  }

  // x ticks: decades of percent remaining on a log axis, else five
  // evenly spaced sparsity values.
  if (opts.log_remaining_axis) {
    int dlo = static_cast<int>(std::ceil(tmin - 1e-9));
    int dhi = static_cast<int>(std::floor(tmax + 1e-9));
    for (int d = dlo; d <= dhi; ++d) {
      double remaining = std::pow(10.0, d);
      double x = ax.x(1.0 - remaining / 100.0);
      svg += "<line x1=\"" + f2(x) + "\" y1=\"" + f2(kTop) + "\" x2=\"" +
             f2(x) + "\" y2=\"" + f2(kBottom) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg += "<text x=\"" + f2(x) + "\" y=\"" + f2(kBottom + 18.0) +
             "\" font-family=\"monospace\" font-size=\"12\" "
             "text-anchor=\"middle\">" +
             fg(remaining) + "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      double s = tmin + (tmax - tmin) * i / 4.0;
      double x = ax.x(s);
      svg += "<line x1=\"" + f2(x) + "\" y1=\"" + f2(kTop) + "\" x2=\"" +
             f2(x) + "\" y2=\"" + f2(kBottom) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      char lbl[32];
      std::snprintf(lbl, sizeof lbl, "%.3f", s);
      svg += "<text x=\"" + f2(x) + "\" y=\"" + f2(kBottom + 18.0) +
             "\" font-family=\"monospace\" font-size=\"12\" "
             "text-anchor=\"middle\">" +
             lbl + "</text>\n";
    }
  }

  // frame + axis captions
  svg += "<rect x=\"" + f2(kLeft) + "\" y=\"" + f2(kTop) + "\" width=\"" +
         f2(kRight - kLeft) + "\" height=\"" + f2(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + f2((kLeft + kRight) / 2.0) + "\" y=\"" +
         f2(kBottom + 40.0) +
         "\" font-family=\"monospace\" font-size=\"13\" "
         "text-anchor=\"middle\">" +
         std::string(opts.log_remaining_axis ? "weights remaining (%)"
                                             : "sparsity") +
         "</text>\n";
  svg += "<text x=\"18\" y=\"" + f2((kTop + kBottom) / 2.0) +
         "\" font-family=\"monospace\" font-size=\"13\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         f2((kTop + kBottom) / 2.0) + ")\">test accuracy</text>\n";
  if (!opts.title.empty())
    svg += "<text x=\"" + f2((kLeft + kRight) / 2.0) +
           "\" y=\"24\" font-family=\"monospace\" font-size=\"15\" "
           "text-anchor=\"middle\">" +
           escape_xml(opts.title) + "</text>\n";

  constexpr size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];
  for (size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % kPaletteSize];
    std::string pts;
    for (const CurvePoint& p : curves[c].points) {
      if (!pts.empty()) pts += ' ';
      pts += f2(ax.x(p.sparsity)) + "," + f2(ypix(p.test_acc));
    }
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.8\"/>\n";
    for (const CurvePoint& p : curves[c].points)
      svg += "<circle cx=\"" + f2(ax.x(p.sparsity)) + "\" cy=\"" +
             f2(ypix(p.test_acc)) + "\" r=\"2.4\" fill=\"" + color +
             "\"/>\n";
  }

  for (size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % kPaletteSize];
    double y = kTop + 16.0 + 16.0 * static_cast<double>(c);
    svg += "<line x1=\"" + f2(kLeft + 10.0) + "\" y1=\"" + f2(y - 4.0) +
           "\" x2=\"" + f2(kLeft + 34.0) + "\" y2=\"" + f2(y - 4.0) +
           "\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2.5\"/>\n";
    svg += "<text x=\"" + f2(kLeft + 40.0) + "\" y=\"" + f2(y) +
           "\" font-family=\"monospace\" font-size=\"12\">" +
           escape_xml(labels[c]) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::string& path, const std::string& svg) {
  std::filesystem::path target(path);
  if (target.has_parent_path())
    std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << svg;
  if (!out.flush()) throw IoError("failed writing " + path);
}

}  // namespace sdd
