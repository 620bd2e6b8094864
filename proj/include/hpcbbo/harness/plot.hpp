#pragma once

// Learning-curve SVG: one median line per curve with the band up to the 65th
// percentile shaded, a legend and labelled axes.

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "hpcbbo/harness/curves.hpp"

namespace hpcbbo::harness {

struct NamedCurve {
  std::string label;
  std::vector<CurvePoint> points;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* axis_label(Axis a) {
  switch (a) {
    case Axis::fabrication_cycles: return "fabrication cycles";
    case Axis::morphologies: return "morphologies evaluated";
    case Axis::evaluations: return "evaluations";
  }
  return "";
}

}  // namespace detail

inline std::string render_svg(const std::vector<NamedCurve>& curves) {
  if (curves.empty()) throw InvalidArgument("plot: no curves");
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  constexpr double W = 640, H = 420, left = 64, right = 170, top = 24, bottom = 52;
  const double pw = W - left - right, ph = H - top - bottom;

  double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = -1e300;
  for (const auto& c : curves) {
    if (c.points.empty()) throw InvalidArgument("plot: curve '" + c.label + "' has no points");
    for (const auto& p : c.points) {
      xmin = std::min(xmin, static_cast<double>(p.x));
      xmax = std::max(xmax, static_cast<double>(p.x));
      ymin = std::min({ymin, p.median, p.p65});
      ymax = std::max({ymax, p.median, p.p65});
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
    << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    s << "<text x=\"" << detail::fmt(sx(xv)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
      << detail::fmt(xv) << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << detail::fmt(sy(yv) + 4) << "\" text-anchor=\"end\">" << detail::fmt(yv)
      << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << detail::axis_label(curves.front().points.front().x_axis) << "</text>\n";
  s << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">best reward so far</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& pts = curves[k].points;
    const char* colour = palette[k % (sizeof palette / sizeof *palette)];
    s << "<g class=\"curve\">\n";
    s << "<polygon class=\"p65\" fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& p : pts) s << detail::fmt(sx(static_cast<double>(p.x))) << ',' << detail::fmt(sy(p.p65)) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      s << detail::fmt(sx(static_cast<double>(it->x))) << ',' << detail::fmt(sy(it->median)) << ' ';
    s << "\"/>\n";
    s << "<polyline class=\"median\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) s << detail::fmt(sx(static_cast<double>(p.x))) << ',' << detail::fmt(sy(p.median)) << ' ';
    s << "\"/>\n";
    for (const auto& p : pts)
      s << "<circle class=\"marker\" cx=\"" << detail::fmt(sx(static_cast<double>(p.x))) << "\" cy=\""
        << detail::fmt(sy(p.median)) << "\" r=\"2.5\" fill=\"" << colour << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    s << "<text class=\"legend\" x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << detail::escape_xml(curves[k].label)
      << "</text>\n";
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace hpcbbo::harness
