#pragma once

#include <optional>

#include "hpcbbo/gp.hpp"

namespace hpcbbo {

/// How a growing GP is kept up to date inside an optimizer loop.
struct GpSchedule {
  /// Full hyperparameter refit after this many appended points; factor-only updates in between.
  std::size_t refit_every = 10;
  /// Restarts for the first fit of a model.
  std::size_t restarts = 10;
  /// Restarts for later refits; the first of them starts from the current hyperparameters.
  std::size_t refit_restarts = 1;
  std::size_t iterations = 100;
  /// Likelihood search runs on a random subset of at most this many points (0 = all).
  std::size_t max_fit_points = 100;

  void validate() const {
    if (refit_every < 1 || restarts < 1 || refit_restarts < 1 || iterations < 1)
      throw InvalidArgument("GpSchedule: counts must be >= 1");
  }
};

/// Hyperparameters used before any data has been seen.
inline gp::KernelHyperparams default_prior_hyper(std::size_t dim) {
  return gp::KernelHyperparams::isotropic(dim, 1.0, 0.3, 1e-6);
}

/// A GP that accumulates observations under a GpSchedule. Value type.
class IncrementalGp {
public:
  IncrementalGp(std::size_t dim, GpSchedule schedule)
      : schedule_(schedule), model_(gp::GpModel::prior(dim, default_prior_hyper(dim))) {
    schedule_.validate();
  }

  const gp::GpModel& model() const noexcept { return model_; }
  std::size_t size() const noexcept { return model_.size(); }
  std::size_t dim() const noexcept { return model_.dim(); }
  std::size_t fits() const noexcept { return fits_; }

  /// Appends without refitting (used for batches of random initial points).
  void append(const gp::Vector& x, double y) {
    model_ = model_.with_observation(x, y);
    ++pending_;
  }

  /// Refits now if never fitted or if the refit cadence is due.
  void maybe_refit(Rng& rng) {
    if (model_.size() == 0) return;
    if (fitted_ && pending_ < schedule_.refit_every) return;
    refit(rng);
  }

  void observe(const gp::Vector& x, double y, Rng& rng) {
    append(x, y);
    maybe_refit(rng);
  }

  void refit(Rng& rng) {
    gp::FitOptions opts;
    opts.iterations = schedule_.iterations;
    opts.max_points = schedule_.max_fit_points;
    if (fitted_) {
      opts.restarts = schedule_.refit_restarts;
      opts.warm_start = model_.hyper();
    } else {
      opts.restarts = schedule_.restarts;
    }
    model_ = gp::fit(model_.data(), rng, opts);
    fitted_ = true;
    pending_ = 0;
    ++fits_;
  }

private:
  GpSchedule schedule_;
  gp::GpModel model_;
  bool fitted_ = false;
  std::size_t pending_ = 0;
  std::size_t fits_ = 0;
};

}  // namespace hpcbbo
