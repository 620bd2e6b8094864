#pragma once

// Flat baselines over the joint 9-dimensional design: standard BO and uniform
// random search. Every evaluation is its own fabrication cycle and morphology.

#include "hpcbbo/acquisition.hpp"
#include "hpcbbo/hpc_bbo.hpp"
#include "hpcbbo/incremental_gp.hpp"
#include "hpcbbo/trace.hpp"

namespace hpcbbo {

struct FlatBudgetConfig {
  std::size_t budget = 250;
  DesignSpace space;
  std::uint64_t seed = 0;

  void validate() const {
    if (budget < 1) throw InvalidArgument("budget must be >= 1");
    space.validate();
  }
};

namespace detail {

inline void push_flat(RunTrace& trace, Phase phase, const MorphologyParams& m, const ControllerParams& c, double y) {
  const std::size_t idx = trace.records.size();
  trace.records.push_back({idx, 0, 0, phase, m, c, y});
  trace.best_per_morphology.push_back(y);
}

}  // namespace detail

struct StandardBoConfig : FlatBudgetConfig {
  std::size_t init_evals = 5;
  AcquisitionConfig acquisition;
  GpSchedule gp;
};

inline void standard_bo_run_into(RunTrace& trace, const Evaluator& objective, const StandardBoConfig& cfg) {
  cfg.validate();
  cfg.acquisition.validate();
  const GuardedObjective guarded{objective, trace};
  const DesignSpace& space = cfg.space;
  Rng rng(derive_seed(cfg.seed, "standard-bo"));
  IncrementalGp model(kJointDim, cfg.gp);
  const std::size_t init = std::min(cfg.init_evals, cfg.budget);
  for (std::size_t i = 0; i < init; ++i) {
    const gp::Vector u = detail::uniform_point(kJointDim, rng);
    const ControllerParams c = space.controller_at(u.head(kControllerDim));
    const MorphologyParams m = space.morphology_at(u.tail(kMorphologyDim));
    const double y = guarded(m, c);
    model.append(space.joint(c, m), y);
    detail::push_flat(trace, Phase::random_init, m, c, y);
  }
  model.maybe_refit(rng);
  const Bounds bounds = Bounds::unit(kJointDim);
  for (std::size_t i = init; i < cfg.budget; ++i) {
    const gp::Vector u = maximize_acquisition(model.model(), bounds, cfg.acquisition, rng);
    const ControllerParams c = space.controller_at(u.head(kControllerDim));
    const MorphologyParams m = space.morphology_at(u.tail(kMorphologyDim));
    const double y = guarded(m, c);
    model.observe(space.joint(c, m), y, rng);
    detail::push_flat(trace, Phase::controller_opt, m, c, y);
  }
}

inline RunTrace standard_bo_run(const Evaluator& objective, const StandardBoConfig& cfg) {
  RunTrace trace;
  standard_bo_run_into(trace, objective, cfg);
  return trace;
}

inline void random_search_run_into(RunTrace& trace, const Evaluator& objective, const FlatBudgetConfig& cfg) {
  cfg.validate();
  const GuardedObjective guarded{objective, trace};
  Rng rng(derive_seed(cfg.seed, "random-search"));
  for (std::size_t i = 0; i < cfg.budget; ++i) {
    const gp::Vector u = detail::uniform_point(kJointDim, rng);
    const ControllerParams c = cfg.space.controller_at(u.head(kControllerDim));
    const MorphologyParams m = cfg.space.morphology_at(u.tail(kMorphologyDim));
    detail::push_flat(trace, Phase::random_init, m, c, guarded(m, c));
  }
}

inline RunTrace random_search_run(const Evaluator& objective, const FlatBudgetConfig& cfg) {
  RunTrace trace;
  random_search_run_into(trace, objective, cfg);
  return trace;
}

}  // namespace hpcbbo
