#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hpcbbo/params.hpp"

namespace hpcbbo {

/// Reward function over a (morphology, controller) pair.
using Objective = std::function<double(const MorphologyParams&, const ControllerParams&)>;

enum class Phase { random_init, controller_opt };

inline const char* to_string(Phase p) { return p == Phase::random_init ? "random_init" : "controller_opt"; }

inline Phase phase_from_string(const std::string& s) {
  if (s == "random_init") return Phase::random_init;
  if (s == "controller_opt") return Phase::controller_opt;
  throw InvalidArgument("unknown phase '" + s + "'");
}

/// One objective evaluation. `batch` is the fabrication cycle (0-based),
/// `morph_idx` the morphology within it, `iter` the evaluation index within
/// that morphology.
struct EvalRecord {
  std::size_t batch = 0;
  std::size_t morph_idx = 0;
  std::size_t iter = 0;
  Phase phase = Phase::random_init;
  MorphologyParams morph;
  ControllerParams ctrl;
  double reward = 0.0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct RunTrace {
  std::vector<EvalRecord> records;
  /// Best reward per fabricated morphology, in fabrication order.
  std::vector<double> best_per_morphology;
  /// Evaluations whose objective threw or returned a non-finite value.
  std::size_t evaluation_errors = 0;

  std::vector<double> best_so_far() const {
    std::vector<double> out;
    out.reserve(records.size());
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) out.push_back(best = std::max(best, r.reward));
    return out;
  }

  double best_reward() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) best = std::max(best, r.reward);
    return best;
  }

  std::size_t cycles() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (i == 0 || records[i].batch != records[i - 1].batch) ++n;
    return n;
  }

  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// Rewards that are non-finite or thrown are recorded as 0, the stationary
/// reward. RunAborted passes through.
struct GuardedObjective {
  const Objective& objective;
  RunTrace& trace;

  double operator()(const MorphologyParams& m, const ControllerParams& c) const {
    double r = std::numeric_limits<double>::quiet_NaN();
    try {
      r = objective(m, c);
    } catch (const RunAborted&) {
      throw;
    } catch (const std::exception&) {
    }
    if (!std::isfinite(r)) {
      ++trace.evaluation_errors;
      return 0.0;
    }
    return r;
  }
};

}  // namespace hpcbbo
