#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "hpcbbo/gp.hpp"

namespace hpcbbo {

using gp::Matrix;
using gp::Vector;

struct Bounds {
  Vector lower;
  Vector upper;

  static Bounds unit(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {Vector::Zero(d), Vector::Ones(d)};
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower.size()); }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() == 0) throw InvalidArgument("Bounds: size mismatch or empty");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i])) throw InvalidArgument("Bounds: lower must be strictly below upper");
  }

  bool contains(const Vector& x) const {
    return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
};

struct AcquisitionConfig {
  double kappa = 2.0;
  std::size_t candidates = 1000;
  std::size_t refine_steps = 50;

  void validate() const {
    if (!std::isfinite(kappa) || kappa < 0.0) throw InvalidArgument("AcquisitionConfig: kappa must be finite and >= 0");
    if (candidates < 1) throw InvalidArgument("AcquisitionConfig: candidates must be >= 1");
  }
};

/// Points that may not be returned: anything within `radius` of one of them
/// scores minus infinity.
struct Exclusion {
  std::vector<Vector> points;
  double radius = 0.0;

  bool excludes(const Vector& x) const {
    for (const auto& p : points)
      if ((p - x).norm() <= radius) return true;
    return false;
  }
};

/// Coordinates [offset, offset + values.size()) held fixed during maximization.
struct FixedContext {
  std::size_t offset = 0;
  Vector values;
};

/// Upper confidence bound: posterior mean plus kappa posterior standard deviations.
inline double ucb(const gp::GpModel& model, const Vector& x, double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("ucb: kappa must be finite and >= 0");
  const auto p = model.predict(x);
  return p.mean + kappa * std::sqrt(p.variance);
}

struct AcquisitionResult {
  Vector point;
  double value = 0.0;
  /// Best value among the raw uniform candidates, before refinement.
  double best_candidate_value = 0.0;
};

namespace detail {

inline Vector ucb_batch(const gp::GpModel& model, const Matrix& points, double kappa) {
  auto [mean, var] = model.predict_batch(points);
  return mean.array() + kappa * var.array().sqrt();
}

}  // namespace detail

/// Uniform multi-sample search followed by coordinate pattern-search
/// refinement of the free coordinates. Ties go to the earliest candidate.
inline AcquisitionResult maximize_acquisition_detailed(const gp::GpModel& model, const Bounds& bounds,
                                                       const AcquisitionConfig& cfg, Rng& rng,
                                                       const std::optional<FixedContext>& fixed = std::nullopt,
                                                       const Exclusion& exclusion = {}) {
  bounds.validate();
  cfg.validate();
  const std::size_t d = bounds.dim();
  if (model.dim() != d) throw InvalidArgument("maximize_acquisition: model and bounds dimensions differ");

  std::vector<bool> is_free(d, true);
  if (fixed) {
    const std::size_t len = static_cast<std::size_t>(fixed->values.size());
    if (fixed->offset + len > d) throw InvalidArgument("maximize_acquisition: context range exceeds bounds");
    for (std::size_t i = 0; i < len; ++i) {
      const auto bi = static_cast<Eigen::Index>(fixed->offset + i);
      const double v = fixed->values[static_cast<Eigen::Index>(i)];
      if (!(v >= bounds.lower[bi] && v <= bounds.upper[bi]))
        throw InvalidArgument("maximize_acquisition: context value out of bounds");
      is_free[fixed->offset + i] = false;
    }
  }
  std::vector<Eigen::Index> free;
  for (std::size_t i = 0; i < d; ++i)
    if (is_free[i]) free.push_back(static_cast<Eigen::Index>(i));
  if (free.empty()) throw InvalidArgument("maximize_acquisition: no free coordinates");

  Vector base(static_cast<Eigen::Index>(d));
  if (fixed) base.segment(static_cast<Eigen::Index>(fixed->offset), fixed->values.size()) = fixed->values;

  const auto m = static_cast<Eigen::Index>(cfg.candidates);
  Matrix pts(static_cast<Eigen::Index>(d), m);
  for (Eigen::Index c = 0; c < m; ++c) {
    auto col = pts.col(c);
    col = base;
    for (auto i : free) col[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
  }

  // The posterior standard deviation never exceeds the prior one, so a
  // candidate whose mean plus kappa prior deviations falls below the running
  // best cannot win and its variance is never computed.
  Matrix cross;
  const Vector mean = model.posterior_mean(pts, cross);
  const double reach = cfg.kappa * std::sqrt(model.prior_variance());
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index c = 0; c < m; ++c)
    if (!exclusion.excludes(pts.col(c))) order.push_back(c);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mean[a] > mean[b]; });

  constexpr std::size_t kBlock = 32;
  Eigen::Index best_idx = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start < order.size(); start += kBlock) {
    if (best_idx >= 0 && mean[order[start]] + reach < best) break;
    const std::size_t len = std::min(kBlock, order.size() - start);
    Matrix block(cross.rows(), static_cast<Eigen::Index>(len));
    for (std::size_t j = 0; j < len; ++j) block.col(static_cast<Eigen::Index>(j)) = cross.col(order[start + j]);
    const Vector var = model.posterior_variance(block);
    for (std::size_t j = 0; j < len; ++j) {
      const Eigen::Index c = order[start + j];
      const double v = mean[c] + cfg.kappa * std::sqrt(var[static_cast<Eigen::Index>(j)]);
      if (best_idx < 0 || v > best || (v == best && c < best_idx)) {
        best = v;
        best_idx = c;
      }
    }
  }
  Vector best_x = best_idx >= 0 ? Vector(pts.col(best_idx)) : Vector(pts.col(0));

  AcquisitionResult result{best_x, best, best};
  Vector step = 0.1 * (bounds.upper - bounds.lower);
  const double min_step = 1e-9 * (bounds.upper - bounds.lower).minCoeff();
  bool improved = false;
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < cfg.refine_steps; ++s) {
    const Eigen::Index i = free[cursor];
    Matrix trial(static_cast<Eigen::Index>(d), 2);
    trial.col(0) = result.point;
    trial.col(1) = result.point;
    trial(i, 0) = std::min(result.point[i] + step[i], bounds.upper[i]);
    trial(i, 1) = std::max(result.point[i] - step[i], bounds.lower[i]);
    Vector vals = detail::ucb_batch(model, trial, cfg.kappa);
    for (Eigen::Index c = 0; c < 2; ++c)
      if (exclusion.excludes(trial.col(c))) vals[c] = -std::numeric_limits<double>::infinity();
    const Eigen::Index pick = vals[1] > vals[0] ? 1 : 0;
    if (vals[pick] > result.value) {
      result.value = vals[pick];
      result.point = trial.col(pick);
      improved = true;
    }
    if (++cursor == free.size()) {
      cursor = 0;
      if (!improved) {
        step *= 0.5;
        if (step.maxCoeff() < min_step) break;
      }
      improved = false;
    }
  }
  return result;
}

inline Vector maximize_acquisition(const gp::GpModel& model, const Bounds& bounds, const AcquisitionConfig& cfg,
                                   Rng& rng, const std::optional<FixedContext>& fixed = std::nullopt) {
  return maximize_acquisition_detailed(model, bounds, cfg, rng, fixed).point;
}

}  // namespace hpcbbo
