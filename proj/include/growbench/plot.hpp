// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "growbench/metrics.hpp"
#include "growbench/timing.hpp"

namespace growbench {

enum class Curve { TrainError, ValError, TestError, Lr, Blocks, Orl, Interval };

inline std::string_view curve_name(Curve c) {
  switch (c) {
    case Curve::TrainError: return "train_error";
    case Curve::ValError: return "val_error";
    case Curve::TestError: return "test_error";
    case Curve::Lr: return "lr";
    case Curve::Blocks: return "blocks";
    case Curve::Orl: return "orl";
    case Curve::Interval: return "interval";
  }
  return "?";
}

inline std::optional<Curve> parse_curve(std::string_view s) {
  for (auto c : {Curve::TrainError, Curve::ValError, Curve::TestError, Curve::Lr, Curve::Blocks,
                 Curve::Orl, Curve::Interval})
    if (curve_name(c) == s) return c;
  return std::nullopt;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PlotSpec {
  std::vector<Curve> curves{Curve::TrainError, Curve::ValError, Curve::TestError};
  std::optional<Range> x_range;
  std::optional<Range> y_range;  // applied to every panel
  // Needed to turn ORL back into the FRAGrow interval.
  double alpha = 4.0;
  int min_finetune = 30;
  std::string title;
};

struct PlotSeries {
  std::string label;
  RunResult run;
};

// Per-epoch values of one curve. Empty optional entries are gaps.
inline std::vector<double> curve_values(const RunResult& r, Curve c, const PlotSpec& spec,
                                        const std::string& label) {
  std::vector<double> out;
  out.reserve(r.metrics.size());
  if (c == Curve::Interval && r.events.empty())
    throw Error("curve 'interval' is not available for '" + label + "': the run has no growth events");
  const double imax = c == Curve::Interval
                          ? i_max(r.total_epochs(), spec.min_finetune, r.events.size())
                          : 0.0;
  for (const auto& m : r.metrics) {
    switch (c) {
      case Curve::TrainError: out.push_back(100.0 - m.train_acc); break;
      case Curve::ValError: out.push_back(100.0 - m.val_acc); break;
      case Curve::TestError: out.push_back(100.0 - m.test_acc); break;
      case Curve::Lr: out.push_back(m.lr); break;
      case Curve::Blocks: {
        std::size_t total = 0;
        for (auto b : m.blocks) total += b;
        out.push_back(static_cast<double>(total));
        break;
      }
      case Curve::Orl: out.push_back(m.orl); break;
      case Curve::Interval: out.push_back(interval(imax, spec.alpha, m.orl)); break;
    }
  }
  return out;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && std::abs(v) < 0.01)
    std::snprintf(buf, sizeof buf, "%.1e", v);
  else
    std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

}  // namespace detail

// Deterministic SVG: one panel per curve, one polyline per series, dashed
// vertical markers at the first epoch each grown block trains.
inline std::string render_svg(const std::vector<PlotSeries>& series, const PlotSpec& spec) {
  if (series.empty()) throw Error("plot: no series given");
  if (spec.curves.empty()) throw Error("plot: no curves requested");
  for (const auto& s : series)
    if (s.run.metrics.empty()) throw Error("plot: '" + s.label + "' has no epoch records");

  constexpr double width = 800.0;
  constexpr double panel_h = 220.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top_pad = 30.0;
  constexpr double bottom_pad = 40.0;
  const double header = spec.title.empty() ? 10.0 : 40.0;
  const double legend_h = 20.0 * static_cast<double>(series.size()) + 10.0;
  const double height = header + panel_h * static_cast<double>(spec.curves.size()) + legend_h;

  double xmin = std::numeric_limits<double>::max();
  double xmax = std::numeric_limits<double>::lowest();
  for (const auto& s : series) {
    xmin = std::min(xmin, static_cast<double>(s.run.metrics.front().epoch));
    xmax = std::max(xmax, static_cast<double>(s.run.metrics.back().epoch));
  }
  if (spec.x_range) {
    xmin = spec.x_range->lo;
    xmax = spec.x_range->hi;
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << detail::fmt(width) << ' '
      << detail::fmt(height) << "\" width=\"" << detail::fmt(width) << "\" height=\""
      << detail::fmt(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << detail::fmt(width) << "\" height=\"" << detail::fmt(height)
      << "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    svg << "<text x=\"" << detail::fmt(width / 2) << "\" y=\"25\" text-anchor=\"middle\" font-size=\"16\">"
        << detail::xml_escape(spec.title) << "</text>\n";

  for (std::size_t p = 0; p < spec.curves.size(); ++p) {
    const Curve c = spec.curves[p];
    std::vector<std::vector<double>> values;
    for (const auto& s : series) values.push_back(curve_values(s.run, c, spec, s.label));

    double ymin = std::numeric_limits<double>::max();
    double ymax = std::numeric_limits<double>::lowest();
    for (const auto& v : values)
      for (double y : v) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (spec.y_range) {
      ymin = spec.y_range->lo;
      ymax = spec.y_range->hi;
    }
    if (!(ymax > ymin)) {
      ymin -= 0.5;
      ymax += 0.5;
    }

    const double y0 = header + panel_h * static_cast<double>(p) + top_pad;
    const double ph = panel_h - top_pad - bottom_pad;
    const double pw = width - left - right;
    const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    const auto sy = [&](double y) {
      const double t = std::clamp((y - ymin) / (ymax - ymin), 0.0, 1.0);
      return y0 + ph - t * ph;
    };

    svg << "<g class=\"panel\" id=\"panel-" << curve_name(c) << "\">\n";
    svg << "<rect x=\"" << detail::fmt(left) << "\" y=\"" << detail::fmt(y0) << "\" width=\""
        << detail::fmt(pw) << "\" height=\"" << detail::fmt(ph)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << detail::fmt(left) << "\" y=\"" << detail::fmt(y0 - 8) << "\">" << curve_name(c)
        << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double yv = ymin + (ymax - ymin) * t / 4.0;
      svg << "<text x=\"" << detail::fmt(left - 6) << "\" y=\"" << detail::fmt(sy(yv) + 4)
          << "\" text-anchor=\"end\">" << detail::tick_label(yv) << "</text>\n";
      const double xv = xmin + (xmax - xmin) * t / 4.0;
      svg << "<text x=\"" << detail::fmt(sx(xv)) << "\" y=\"" << detail::fmt(y0 + ph + 16)
          << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n";
    }
    svg << "<text x=\"" << detail::fmt(left + pw / 2) << "\" y=\"" << detail::fmt(y0 + ph + 32)
        << "\" text-anchor=\"middle\">epoch</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& run = series[i].run;
      for (const auto& e : run.events) {
        const double x = static_cast<double>(e.epoch);
        if (x < xmin || x > xmax) continue;
        svg << "<line class=\"growth\" x1=\"" << detail::fmt(sx(x)) << "\" y1=\"" << detail::fmt(y0)
            << "\" x2=\"" << detail::fmt(sx(x)) << "\" y2=\"" << detail::fmt(y0 + ph) << "\" stroke=\""
            << detail::palette(i) << "\" stroke-opacity=\"0.35\" stroke-dasharray=\"4 3\"/>\n";
      }
      svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << detail::palette(i)
          << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t k = 0; k < run.metrics.size(); ++k) {
        const double x = static_cast<double>(run.metrics[k].epoch);
        if (x < xmin || x > xmax) continue;
        if (!first) svg << ' ';
        first = false;
        svg << detail::fmt(sx(x)) << ',' << detail::fmt(sy(values[i][k]));
      }
      svg << "\"/>\n";
    }
    svg << "</g>\n";
  }

  const double ly = header + panel_h * static_cast<double>(spec.curves.size());
  svg << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = ly + 20.0 * static_cast<double>(i) + 10.0;
    svg << "<line x1=\"" << detail::fmt(left) << "\" y1=\"" << detail::fmt(y) << "\" x2=\""
        << detail::fmt(left + 30) << "\" y2=\"" << detail::fmt(y) << "\" stroke=\"" << detail::palette(i)
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << detail::fmt(left + 38) << "\" y=\"" << detail::fmt(y + 4) << "\">"
        << detail::xml_escape(series[i].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace growbench
