#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hpcbbo/harness/trace_io.hpp"

namespace hpcbbo::harness {

enum class Axis { fabrication_cycles, morphologies, evaluations };

inline const char* to_string(Axis a) {
  switch (a) {
    case Axis::fabrication_cycles: return "fabrication_cycles";
    case Axis::morphologies: return "morphologies";
    case Axis::evaluations: return "evaluations";
  }
  return "";
}

/// Accepts the CLI spellings (cycles, morphologies, evaluations) and the CSV ones.
inline Axis axis_from_string(const std::string& s) {
  if (s == "cycles" || s == "fabrication_cycles") return Axis::fabrication_cycles;
  if (s == "morphologies") return Axis::morphologies;
  if (s == "evaluations") return Axis::evaluations;
  throw InvalidArgument("unknown axis '" + s + "'");
}

struct CurvePoint {
  Axis x_axis = Axis::evaluations;
  std::size_t x = 0;
  double median = 0.0;
  double p65 = 0.0;
  std::size_t n_seeds = 0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Percentile by linear interpolation between order statistics, q in [0, 1].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("percentile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("percentile: q must be in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Best-so-far after each tick of the axis: element t-1 is the best reward
/// among records counted by the first t ticks.
inline std::vector<double> best_so_far_by(const RunTrace& trace, Axis axis) {
  std::vector<double> out;
  double best = -std::numeric_limits<double>::infinity();
  const auto& rec = trace.records;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    bool new_tick = true;
    if (i > 0) {
      if (axis == Axis::fabrication_cycles)
        new_tick = rec[i].batch != rec[i - 1].batch;
      else if (axis == Axis::morphologies)
        new_tick = rec[i].batch != rec[i - 1].batch || rec[i].morph_idx != rec[i - 1].morph_idx;
    }
    best = std::max(best, rec[i].reward);
    if (new_tick)
      out.push_back(best);
    else
      out.back() = best;
  }
  return out;
}

/// Median and 65th percentile of best-so-far across seeds at each tick. A tick
/// is reported while at least one seed reaches it; n_seeds says how many do.
inline std::vector<CurvePoint> aggregate_curves(const std::vector<TraceFile>& files, Axis axis) {
  if (files.empty()) throw InvalidArgument("aggregate_curves: no traces");
  const std::string& algorithm = files.front().header.algorithm;
  const std::string& accounting = files.front().header.accounting;
  for (const auto& f : files) {
    if (f.header.accounting != accounting)
      throw InvalidArgument("aggregate_curves: traces mix '" + accounting + "' and '" + f.header.accounting +
                            "' cycle accounting");
    if (f.header.algorithm != algorithm)
      throw InvalidArgument("aggregate_curves: traces mix algorithms '" + algorithm + "' and '" + f.header.algorithm + "'");
    if (!f.header.complete) throw InvalidArgument("aggregate_curves: incomplete trace (seed " + std::to_string(f.header.seed) + ")");
  }
  std::vector<std::vector<double>> curves;
  std::size_t ticks = 0;
  for (const auto& f : files) {
    curves.push_back(best_so_far_by(f.trace, axis));
    ticks = std::max(ticks, curves.back().size());
  }
  std::vector<CurvePoint> out;
  for (std::size_t t = 0; t < ticks; ++t) {
    std::vector<double> values;
    for (const auto& c : curves)
      if (t < c.size()) values.push_back(c[t]);
    out.push_back({axis, t + 1, percentile(values, 0.5), percentile(values, 0.65), values.size()});
  }
  return out;
}

inline void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& points) {
  os << "x_axis,x,median,p65,n_seeds\n";
  const auto old = os.precision(17);
  for (const auto& p : points) os << to_string(p.x_axis) << ',' << p.x << ',' << p.median << ',' << p.p65 << ',' << p.n_seeds << '\n';
  os.precision(old);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  out.push_back(cell);
  return out;
}

inline double parse_number(const std::string& s, std::size_t row) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", row);
  }
  if (used != s.size()) throw ParseError("not a number: '" + s + "'", row);
  return v;
}

inline std::size_t parse_count(const std::string& s, std::size_t row) {
  const double v = parse_number(s, row);
  if (!(v >= 0.0) || v != std::floor(v)) throw ParseError("not a count: '" + s + "'", row);
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Reads a curve CSV. Rows are numbered from 1 with the header as row 1.
inline std::vector<CurvePoint> read_curves_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError("empty curve file", 1);
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x_axis,x,median,p65,n_seeds") throw ParseError("expected header 'x_axis,x,median,p65,n_seeds'", row);
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 5) throw ParseError("expected 5 columns, got " + std::to_string(cells.size()), row);
    CurvePoint p;
    try {
      p.x_axis = axis_from_string(cells[0]);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), row);
    }
    p.x = detail::parse_count(cells[1], row);
    p.median = detail::parse_number(cells[2], row);
    p.p65 = detail::parse_number(cells[3], row);
    p.n_seeds = detail::parse_count(cells[4], row);
    out.push_back(p);
  }
  return out;
}

}  // namespace hpcbbo::harness
