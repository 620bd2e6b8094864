#pragma once

// Cross-evaluation of the best morphology/controller pairs: every controller
// is run on every other pair's morphology.

#include <cmath>
#include <iomanip>
#include <ostream>

#include "hpcbbo/harness/trace_io.hpp"
#include "hpcbbo/surrogate.hpp"

namespace hpcbbo::harness {

inline constexpr double kMinMorphologySeparation = 0.05;

struct DesignPair {
  MorphologyParams morph;
  ControllerParams ctrl;
  double reward = 0.0;
};

struct RecombinationMatrix {
  std::vector<DesignPair> pairs;
  /// entry[i][j]: percent change of controller i on morphology j relative to
  /// morphology j's own controller. The diagonal is 0.
  std::vector<std::vector<double>> entry;

  std::size_t size() const { return pairs.size(); }

  double mean_off_diagonal() const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (i != j) s += entry[i][j], ++n;
    return n ? s / static_cast<double>(n) : 0.0;
  }

  std::size_t off_diagonal_at_most(double v) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (i != j && entry[i][j] <= v) ++n;
    return n;
  }
};

/// Best controller per fabricated morphology across all traces, best first.
inline std::vector<DesignPair> best_pairs(const std::vector<TraceFile>& files) {
  std::vector<DesignPair> out;
  for (const auto& f : files) {
    const auto& rec = f.trace.records;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const bool fresh = i == 0 || rec[i].batch != rec[i - 1].batch || rec[i].morph_idx != rec[i - 1].morph_idx;
      if (fresh)
        out.push_back({rec[i].morph, rec[i].ctrl, rec[i].reward});
      else if (rec[i].reward > out.back().reward)
        out.back() = {rec[i].morph, rec[i].ctrl, rec[i].reward};
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const DesignPair& a, const DesignPair& b) { return a.reward > b.reward; });
  return out;
}

/// Greedy top-n pairs whose morphologies are at least `separation` apart in
/// normalized units and whose reward is positive.
inline std::vector<DesignPair> select_distinct(const std::vector<DesignPair>& ranked, std::size_t top_n,
                                               const DesignSpace& space, double separation = kMinMorphologySeparation) {
  std::vector<DesignPair> out;
  for (const auto& p : ranked) {
    if (out.size() == top_n) break;
    if (!(p.reward > 0.0)) break;
    const Eigen::VectorXd u = space.normalize(p.morph);
    bool distinct = true;
    for (const auto& q : out) distinct = distinct && (space.normalize(q.morph) - u).norm() >= separation;
    if (distinct) out.push_back(p);
  }
  if (out.size() < top_n)
    throw InsufficientData("recombination: found " + std::to_string(out.size()) + " distinct morphologies, need " +
                           std::to_string(top_n));
  return out;
}

inline RecombinationMatrix recombination_matrix(const std::vector<TraceFile>& files, std::size_t top_n,
                                                const surrogate::SurrogateConfig& sc = {}) {
  if (top_n < 1) throw InvalidArgument("recombination: top_n must be >= 1");
  RecombinationMatrix m;
  m.pairs = select_distinct(best_pairs(files), top_n, sc.space);
  const std::size_t n = m.pairs.size();
  std::vector<double> own(n);
  for (std::size_t j = 0; j < n; ++j) {
    own[j] = surrogate::evaluate_gait(m.pairs[j].morph, m.pairs[j].ctrl, sc).reward;
    if (!(own[j] > 0.0))
      throw InsufficientData("recombination: pair " + std::to_string(j + 1) + " has zero reward on the surrogate");
  }
  m.entry.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r = surrogate::evaluate_gait(m.pairs[j].morph, m.pairs[i].ctrl, sc).reward;
      m.entry[i][j] = 100.0 * (r - own[j]) / own[j];
    }
  return m;
}

/// Rows are controllers, columns morphologies; the diagonal is written "--".
inline void write_recombination_csv(std::ostream& os, const RecombinationMatrix& m) {
  os << "controller";
  for (std::size_t j = 0; j < m.size(); ++j) os << ",morphology_" << j + 1;
  os << '\n';
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << "controller_" << i + 1;
    for (std::size_t j = 0; j < m.size(); ++j) {
      os << ',';
      if (i == j)
        os << "--";
      else
        os << m.entry[i][j];
    }
    os << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace hpcbbo::harness
