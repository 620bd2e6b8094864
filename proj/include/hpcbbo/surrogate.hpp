#pragma once

// Quasi-static hexapod gait evaluator. Drives the CPG, decides per time step
// which feet carry load, and integrates the body motion those feet produce.
//
// Per step k -> k+1:
//   stance(l)  <=> vertical(l) - stance_shift * (ratio(l) - 1) < stance_threshold
//   push(l)    =  -ratio(l) * (sin h(l, k+1) - sin h(l, k)) / dt   (foot travel along the body axis)
//   groups     =  {left, right} x {tripod A, tripod B}, each averaged over its stance legs
//   speed      =  mean over non-empty groups, scaled by slip_penalty when fewer than
//                 min_stance_legs feet are down
//   heading   +=  turn_sensitivity * (left impulse - right impulse)
// The reward is reward_scale times the displacement along the initial heading,
// floored at zero.

#include <array>
#include <cmath>
#include <ostream>
#include <vector>

#include "hpcbbo/cpg.hpp"
#include "hpcbbo/params.hpp"

namespace hpcbbo::surrogate {

struct SurrogateConfig {
  double stance_threshold = 0.0;  // rad
  std::size_t min_stance_legs = 3;
  double slip_penalty = 0.2;
  double turn_sensitivity = 0.5;
  /// Vertical shift per unit of leg-ratio deviation from 1; longer legs touch down earlier.
  double stance_shift = 0.6;
  /// Best of 10000 uniform random designs scores about 25 to 27.
  double reward_scale = 0.5;
  cpg::CpgNetworkConfig network = cpg::CpgNetworkConfig::tripod();
  DesignSpace space;

  void validate() const {
    if (!(slip_penalty > 0.0 && slip_penalty <= 1.0)) throw InvalidArgument("SurrogateConfig: slip_penalty must be in (0, 1]");
    if (min_stance_legs < 1 || min_stance_legs > cpg::kLegs)
      throw InvalidArgument("SurrogateConfig: min_stance_legs must be in [1, 6]");
    if (!std::isfinite(turn_sensitivity) || !std::isfinite(stance_shift) || !std::isfinite(stance_threshold))
      throw InvalidArgument("SurrogateConfig: non-finite coefficient");
    if (!(reward_scale > 0.0) || !std::isfinite(reward_scale))
      throw InvalidArgument("SurrogateConfig: reward_scale must be positive");
    network.validate();
    space.validate();
  }
};

struct Diagnostics {
  double mean_stance_count = 0.0;
  double heading_drift = 0.0;  // rad, final heading
  std::array<double, cpg::kLegs> duty_factor{};
};

struct EvaluationResult {
  double reward = 0.0;
  Diagnostics diagnostics;
};

struct GaitSample {
  double t = 0.0;
  std::size_t stance_count = 0;
  double speed = 0.0;
  double heading = 0.0;
};

inline EvaluationResult evaluate_gait(const MorphologyParams& morph, const ControllerParams& ctrl,
                                      const SurrogateConfig& cfg = {}, std::vector<GaitSample>* samples = nullptr) {
  if (!cfg.space.morphology.contains(morph.leg_ratios))
    throw InvalidArgument("evaluate_gait: morphology out of bounds");
  const cpg::MotorTrajectory traj = cpg::simulate_cpg(ctrl, cfg.network, cfg.space.controller);
  const std::size_t steps = traj.samples() - 1;

  std::array<double, cpg::kLegs> length{}, shift{};
  for (std::size_t l = 0; l < cpg::kLegs; ++l) {
    length[l] = morph.leg_ratios[cpg::pair_of(l)];
    shift[l] = cfg.stance_shift * (length[l] - 1.0);
  }

  EvaluationResult out;
  double x = 0.0, heading = 0.0;
  std::size_t stance_total = 0;
  std::array<std::size_t, cpg::kLegs> stance_steps{};
  if (samples) samples->clear();

  for (std::size_t k = 0; k < steps; ++k) {
    // group index: 2 * side (0 left, 1 right) + tripod (0 A, 1 B)
    std::array<double, 4> sum{};
    std::array<int, 4> count{};
    std::size_t stance = 0;
    for (std::size_t l = 0; l < cpg::kLegs; ++l) {
      if (!(traj.vertical_at(l, k) - shift[l] < cfg.stance_threshold)) continue;
      ++stance;
      ++stance_steps[l];
      const double push =
          -length[l] * (std::sin(traj.horizontal_at(l, k + 1)) - std::sin(traj.horizontal_at(l, k))) / traj.dt;
      const std::size_t g = 2 * (cpg::is_left(l) ? 0 : 1) + (cpg::in_tripod_a(l) ? 0 : 1);
      sum[g] += push;
      ++count[g];
    }
    std::array<double, 4> mean{};
    double speed = 0.0;
    int groups = 0;
    for (std::size_t g = 0; g < 4; ++g) {
      if (count[g] == 0) continue;
      mean[g] = sum[g] / count[g];
      speed += mean[g];
      ++groups;
    }
    const double factor = stance < cfg.min_stance_legs ? cfg.slip_penalty : 1.0;
    speed = groups > 0 ? factor * speed / groups : 0.0;
    const double left_impulse = factor * (mean[0] + mean[1]) * traj.dt;
    const double right_impulse = factor * (mean[2] + mean[3]) * traj.dt;

    x += speed * std::cos(heading) * traj.dt;
    heading += cfg.turn_sensitivity * (left_impulse - right_impulse);
    stance_total += stance;
    if (samples) samples->push_back({traj.time(k), stance, speed, heading});
  }

  out.reward = std::max(0.0, cfg.reward_scale * x);
  if (!std::isfinite(out.reward)) out.reward = 0.0;
  out.diagnostics.heading_drift = heading;
  out.diagnostics.mean_stance_count = steps ? static_cast<double>(stance_total) / static_cast<double>(steps) : 0.0;
  for (std::size_t l = 0; l < cpg::kLegs; ++l)
    out.diagnostics.duty_factor[l] = steps ? static_cast<double>(stance_steps[l]) / static_cast<double>(steps) : 0.0;
  return out;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<GaitSample>& samples) {
  os << "t,stance_count,speed,heading\n";
  os.precision(17);
  for (const auto& s : samples) os << s.t << ',' << s.stance_count << ',' << s.speed << ',' << s.heading << '\n';
}

}  // namespace hpcbbo::surrogate
