#pragma once

// Hierarchical process-constrained batch Bayesian optimization.
//
// The outer loop picks a batch of K morphologies per fabrication cycle from a
// morphology GP, using hallucinated rewards to spread the batch. The inner
// loop tunes a controller for each morphology, either with one contextual GP
// shared across all morphologies (morphology pinned as context) or with a
// fresh GP per morphology.

#include <optional>
#include <vector>

#include "hpcbbo/acquisition.hpp"
#include "hpcbbo/incremental_gp.hpp"
#include "hpcbbo/params.hpp"
#include "hpcbbo/trace.hpp"

namespace hpcbbo {

struct HpcBboConfig {
  std::size_t K = 5;
  std::size_t num_batches = 5;
  std::size_t num_iters = 50;
  bool contextual = true;
  std::size_t init_controller_evals = 5;
  DesignSpace space;
  AcquisitionConfig acquisition;
  GpSchedule controller_gp;
  /// Morphology GP: refit from scratch after every batch.
  std::size_t morphology_restarts = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (K < 1 || num_batches < 1 || num_iters < 1) throw InvalidArgument("HpcBboConfig: K, num_batches, num_iters must be >= 1");
    space.validate();
    acquisition.validate();
    controller_gp.validate();
    if (morphology_restarts < 1) throw InvalidArgument("HpcBboConfig: morphology_restarts must be >= 1");
  }
};

struct ControllerEvaluation {
  ControllerParams ctrl;
  double reward = 0.0;
  Phase phase = Phase::controller_opt;
};

struct ControllerResult {
  ControllerParams best;
  double best_reward = 0.0;
  std::vector<ControllerEvaluation> evaluations;
};

using Evaluator = std::function<double(const MorphologyParams&, const ControllerParams&)>;

namespace detail {

inline gp::Vector uniform_point(std::size_t dim, Rng& rng) {
  gp::Vector u(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform();
  return u;
}

inline void keep_best(ControllerResult& r, const ControllerParams& c, double reward, Phase phase) {
  if (r.evaluations.empty() || reward > r.best_reward) {
    r.best = c;
    r.best_reward = reward;
  }
  r.evaluations.push_back({c, reward, phase});
}

}  // namespace detail

/// Contextual controller search: every evaluation is appended to the shared
/// 9-dimensional GP as (controller, morphology). `init_evals` random
/// controllers are evaluated first (used once, for the very first morphology).
inline ControllerResult optimize_controller_contextual(IncrementalGp& controller_gp, const MorphologyParams& morph,
                                                       std::size_t num_iters, const Evaluator& objective, Rng& rng,
                                                       const DesignSpace& space = {},
                                                       const AcquisitionConfig& acq = {},
                                                       std::size_t init_evals = 0) {
  if (controller_gp.dim() != kJointDim) throw InvalidArgument("optimize_controller_contextual: GP must be 9-dimensional");
  if (!space.morphology.contains(morph.leg_ratios))
    throw InvalidArgument("optimize_controller_contextual: morphology out of bounds");
  const gp::Vector context = space.normalize(morph);
  ControllerResult result;
  auto joint = [&](const gp::Vector& u_ctrl) {
    gp::Vector x(static_cast<Eigen::Index>(kJointDim));
    x << u_ctrl, context;
    return x;
  };
  for (std::size_t i = 0; i < init_evals; ++i) {
    const gp::Vector u = detail::uniform_point(kControllerDim, rng);
    const ControllerParams c = space.controller_at(u);
    const double y = objective(morph, c);
    controller_gp.append(joint(space.normalize(c)), y);
    detail::keep_best(result, c, y, Phase::random_init);
  }
  controller_gp.maybe_refit(rng);

  const Bounds bounds = Bounds::unit(kJointDim);
  const FixedContext fixed{kControllerDim, context};
  for (std::size_t i = 0; i < num_iters; ++i) {
    const gp::Vector x = maximize_acquisition(controller_gp.model(), bounds, acq, rng, fixed);
    const ControllerParams c = space.controller_at(x.head(kControllerDim));
    const double y = objective(morph, c);
    controller_gp.observe(joint(space.normalize(c)), y, rng);
    detail::keep_best(result, c, y, Phase::controller_opt);
  }
  return result;
}

/// Independent controller search on a fresh 6-dimensional GP.
inline ControllerResult optimize_controller_noncontextual(const MorphologyParams& morph, std::size_t num_iters,
                                                          std::size_t init_evals, const Evaluator& objective, Rng& rng,
                                                          const DesignSpace& space = {},
                                                          const AcquisitionConfig& acq = {},
                                                          const GpSchedule& schedule = {}) {
  if (!space.morphology.contains(morph.leg_ratios))
    throw InvalidArgument("optimize_controller_noncontextual: morphology out of bounds");
  IncrementalGp model(kControllerDim, schedule);
  ControllerResult result;
  for (std::size_t i = 0; i < init_evals; ++i) {
    const ControllerParams c = space.controller_at(detail::uniform_point(kControllerDim, rng));
    const double y = objective(morph, c);
    model.append(space.normalize(c), y);
    detail::keep_best(result, c, y, Phase::random_init);
  }
  model.maybe_refit(rng);
  const Bounds bounds = Bounds::unit(kControllerDim);
  for (std::size_t i = 0; i < num_iters; ++i) {
    const gp::Vector u = maximize_acquisition(model.model(), bounds, acq, rng);
    const ControllerParams c = space.controller_at(u);
    const double y = objective(morph, c);
    model.observe(space.normalize(c), y, rng);
    detail::keep_best(result, c, y, Phase::controller_opt);
  }
  return result;
}

/// Minimum distance (normalized units) between two members of one batch.
inline constexpr double kBatchSeparation = 0.01;

/// Batch of K points (normalized units) from UCB on a temporary copy of the
/// morphology GP. Each pick is conditioned on a hallucinated reward equal to
/// the persistent model's posterior mean there; the persistent model is never
/// modified. A hallucination on an already observed input merges into it and
/// cannot move the argmax, so picks also keep `separation` from earlier
/// members of the same batch.
inline std::vector<gp::Vector> select_batch_normalized(const gp::GpModel& morph_gp, std::size_t K,
                                                       const Bounds& bounds, const AcquisitionConfig& acq,
                                                       Rng& rng, double separation = kBatchSeparation) {
  if (K < 1) throw InvalidArgument("select_batch: K must be >= 1");
  gp::GpModel temporary = morph_gp;
  std::vector<gp::Vector> batch;
  batch.reserve(K);
  Exclusion exclusion{{}, separation};
  for (std::size_t k = 0; k < K; ++k) {
    gp::Vector x = maximize_acquisition_detailed(temporary, bounds, acq, rng, std::nullopt, exclusion).point;
    exclusion.points.push_back(x);
    const double h = morph_gp.predict(x).mean;
    if (k + 1 < K) temporary = gp::condition_on_hallucination(temporary, x, h);
    batch.push_back(std::move(x));
  }
  return batch;
}

inline std::vector<MorphologyParams> select_batch(const gp::GpModel& morph_gp, std::size_t K,
                                                  const DesignSpace& space, const AcquisitionConfig& acq, Rng& rng) {
  std::vector<MorphologyParams> out;
  for (const auto& u : select_batch_normalized(morph_gp, K, Bounds::unit(kMorphologyDim), acq, rng))
    out.push_back(space.morphology_at(u));
  return out;
}

/// First batch: K uniform morphologies from the seed's dedicated stream.
inline std::vector<MorphologyParams> initial_batch(std::uint64_t seed, std::size_t K, const DesignSpace& space) {
  Rng rng(derive_seed(seed, "initial-batch"));
  std::vector<MorphologyParams> out;
  for (std::size_t k = 0; k < K; ++k) out.push_back(space.morphology_at(detail::uniform_point(kMorphologyDim, rng)));
  return out;
}

struct HpcBboResult {
  RunTrace trace;
  /// Persistent morphology dataset after each completed batch.
  std::vector<gp::Dataset> morphology_history;
  /// Morphology GP fitted on all completed batches.
  std::optional<gp::GpModel> morphology_gp;
  /// Contextual runs only: size of the shared controller dataset after each batch.
  std::vector<std::size_t> controller_data_sizes;
};

/// Runs the full hierarchical loop, appending into `result` as it goes so a
/// caller still holds the partial trace if the objective aborts the run.
inline void hpc_bbo_run_into(HpcBboResult& result, const Evaluator& objective, const HpcBboConfig& cfg) {
  cfg.validate();
  RunTrace& trace = result.trace;
  const GuardedObjective guarded{objective, trace};
  const DesignSpace& space = cfg.space;

  std::vector<MorphologyParams> batch = initial_batch(cfg.seed, cfg.K, space);
  gp::Dataset morph_data(kMorphologyDim);
  std::optional<IncrementalGp> shared;
  if (cfg.contextual) shared.emplace(kJointDim, cfg.controller_gp);
  Rng morph_rng(derive_seed(cfg.seed, "morphology"));

  for (std::size_t b = 0; b < cfg.num_batches; ++b) {
    for (std::size_t k = 0; k < cfg.K; ++k) {
      const MorphologyParams& morph = batch[k];
      Rng rng(derive_seed(derive_seed(cfg.seed, "controller"), b * cfg.K + k));
      const ControllerResult r =
          cfg.contextual
              ? optimize_controller_contextual(*shared, morph, cfg.num_iters, guarded, rng, space, cfg.acquisition,
                                               b == 0 && k == 0 ? cfg.init_controller_evals : 0)
              : optimize_controller_noncontextual(morph, cfg.num_iters, cfg.init_controller_evals, guarded, rng, space,
                                                  cfg.acquisition, cfg.controller_gp);
      for (std::size_t i = 0; i < r.evaluations.size(); ++i) {
        const auto& e = r.evaluations[i];
        trace.records.push_back({b, k, i, e.phase, morph, e.ctrl, e.reward});
      }
      trace.best_per_morphology.push_back(r.best_reward);
      morph_data.add(space.normalize(morph), r.best_reward);
    }
    result.morphology_history.push_back(morph_data);
    if (shared) result.controller_data_sizes.push_back(shared->size());
    result.morphology_gp = gp::fit(morph_data, cfg.morphology_restarts, morph_rng);
    if (b + 1 < cfg.num_batches) batch = select_batch(*result.morphology_gp, cfg.K, space, cfg.acquisition, morph_rng);
  }
}

inline HpcBboResult hpc_bbo_run_detailed(const Evaluator& objective, const HpcBboConfig& cfg) {
  HpcBboResult result;
  hpc_bbo_run_into(result, objective, cfg);
  return result;
}

inline RunTrace hpc_bbo_run(const Evaluator& objective, const HpcBboConfig& cfg) {
  return hpc_bbo_run_detailed(objective, cfg).trace;
}

}  // namespace hpcbbo
