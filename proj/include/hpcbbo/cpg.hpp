#pragma once

// Central pattern generator: twelve amplitude-controlled phase oscillators
// (one vertical and one horizontal per leg) in a fixed tripod topology,
// integrated with classical RK4.
//
// Leg order: 0 front-left, 1 front-right, 2 middle-left, 3 middle-right,
// 4 rear-left, 5 rear-right. Oscillator l drives the vertical motor of leg l,
// oscillator 6 + l its horizontal motor.

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "hpcbbo/errors.hpp"
#include "hpcbbo/params.hpp"

namespace hpcbbo::cpg {

inline constexpr std::size_t kLegs = 6;
inline constexpr std::size_t kOscillators = 2 * kLegs;

constexpr std::size_t vertical(std::size_t leg) { return leg; }
constexpr std::size_t horizontal(std::size_t leg) { return kLegs + leg; }
constexpr bool is_left(std::size_t leg) { return leg % 2 == 0; }
/// Tripod A = {0, 3, 4}, tripod B = {1, 2, 5}.
constexpr bool in_tripod_a(std::size_t leg) { return leg == 0 || leg == 3 || leg == 4; }
/// Leg pair (0 front, 1 middle, 2 rear).
constexpr std::size_t pair_of(std::size_t leg) { return leg / 2; }

struct CpgState {
  std::array<double, kOscillators> phase{};
  std::array<double, kOscillators> amplitude{};
  std::array<double, kOscillators> amplitude_rate{};
  std::array<double, kOscillators> offset{};

  bool finite() const {
    for (std::size_t i = 0; i < kOscillators; ++i)
      if (!std::isfinite(phase[i]) || !std::isfinite(amplitude[i]) || !std::isfinite(amplitude_rate[i]) ||
          !std::isfinite(offset[i]))
        return false;
    return true;
  }

  double output(std::size_t i) const { return offset[i] + amplitude[i] * std::cos(phase[i]); }
};

/// Directed coupling: oscillator `to` is pulled toward phase(from) - bias.
struct Coupling {
  std::size_t to = 0;
  std::size_t from = 0;
  double weight = 0.0;
  double bias = 0.0;  // locks phase(from) - phase(to) at this value
};

struct CpgNetworkConfig {
  std::vector<Coupling> couplings;
  double gain_amplitude = 20.0;  // a_r, 1/s
  double gain_offset = 20.0;     // a_x, 1/s
  double dt = 0.01;
  double duration = 10.0;
  double transient_cut = 2.0;

  /// Tripods in antiphase; each vertical oscillator leads its horizontal by pi/2.
  static CpgNetworkConfig tripod(double weight = 4.0) {
    CpgNetworkConfig net;
    auto link = [&](std::size_t a, std::size_t b, double bias_ab) {
      net.couplings.push_back({a, b, weight, bias_ab});
      net.couplings.push_back({b, a, weight, -bias_ab});
    };
    constexpr double pi = std::numbers::pi;
    // contralateral and ipsilateral neighbours, always across tripods
    const std::array<std::pair<std::size_t, std::size_t>, 7> legs{
        {{0, 1}, {2, 3}, {4, 5}, {0, 2}, {2, 4}, {1, 3}, {3, 5}}};
    for (auto [a, b] : legs) link(vertical(a), vertical(b), pi);
    for (std::size_t l = 0; l < kLegs; ++l) link(vertical(l), horizontal(l), -pi / 2.0);
    return net;
  }

  void validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("CpgNetworkConfig: dt must be positive");
    if (!(transient_cut >= 0.0) || !(duration > transient_cut))
      throw InvalidArgument("CpgNetworkConfig: need duration > transient_cut >= 0");
    if (!(gain_amplitude > 0.0) || !(gain_offset > 0.0)) throw InvalidArgument("CpgNetworkConfig: gains must be positive");
    std::array<std::size_t, kOscillators> parent{};
    for (std::size_t i = 0; i < kOscillators; ++i) parent[i] = i;
    auto root = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (const auto& c : couplings) {
      if (c.to >= kOscillators || c.from >= kOscillators) throw InvalidArgument("CpgNetworkConfig: bad oscillator index");
      if (!(c.weight >= 0.0)) throw InvalidArgument("CpgNetworkConfig: coupling weights must be >= 0");
      if (c.weight > 0.0) parent[root(c.to)] = root(c.from);
    }
    for (std::size_t i = 1; i < kOscillators; ++i)
      if (root(i) != root(0)) throw InvalidArgument("CpgNetworkConfig: coupling graph is not connected");
  }

  std::size_t total_steps() const { return static_cast<std::size_t>(std::llround(duration / dt)); }
  std::size_t transient_steps() const { return static_cast<std::size_t>(std::llround(transient_cut / dt)); }
};

/// Per-oscillator amplitude and offset targets implied by the controller.
struct Targets {
  std::array<double, kOscillators> amplitude{};
  std::array<double, kOscillators> offset{};
};

inline Targets targets_of(const ControllerParams& p) {
  Targets t;
  for (std::size_t l = 0; l < kLegs; ++l) {
    t.amplitude[vertical(l)] = p.r_vertical;
    t.offset[vertical(l)] = p.offset_vertical;
    t.amplitude[horizontal(l)] = is_left(l) ? p.x_left : p.x_right;
    t.offset[horizontal(l)] = p.offset_horizontal;
  }
  return t;
}

namespace detail {

inline CpgState derivative(const CpgState& s, double omega, const Targets& t, const CpgNetworkConfig& net) {
  CpgState d;
  const double base = 2.0 * std::numbers::pi * omega;
  d.phase.fill(base);
  for (const auto& c : net.couplings)
    d.phase[c.to] += c.weight * s.amplitude[c.from] * std::sin(s.phase[c.from] - s.phase[c.to] - c.bias);
  const double ar = net.gain_amplitude;
  for (std::size_t i = 0; i < kOscillators; ++i) {
    d.amplitude[i] = s.amplitude_rate[i];
    d.amplitude_rate[i] = ar * (ar / 4.0 * (t.amplitude[i] - s.amplitude[i]) - s.amplitude_rate[i]);
    d.offset[i] = net.gain_offset * (t.offset[i] - s.offset[i]);
  }
  return d;
}

inline CpgState axpy(const CpgState& s, const CpgState& d, double h) {
  CpgState out;
  for (std::size_t i = 0; i < kOscillators; ++i) {
    out.phase[i] = s.phase[i] + h * d.phase[i];
    out.amplitude[i] = s.amplitude[i] + h * d.amplitude[i];
    out.amplitude_rate[i] = s.amplitude_rate[i] + h * d.amplitude_rate[i];
    out.offset[i] = s.offset[i] + h * d.offset[i];
  }
  return out;
}

inline CpgState rk4(const CpgState& s, double omega, const Targets& t, const CpgNetworkConfig& net) {
  const double h = net.dt;
  const CpgState k1 = derivative(s, omega, t, net);
  const CpgState k2 = derivative(axpy(s, k1, h / 2.0), omega, t, net);
  const CpgState k3 = derivative(axpy(s, k2, h / 2.0), omega, t, net);
  const CpgState k4 = derivative(axpy(s, k3, h), omega, t, net);
  CpgState out;
  auto combine = [h](double y, double a, double b, double c, double d) { return y + h / 6.0 * (a + 2.0 * b + 2.0 * c + d); };
  for (std::size_t i = 0; i < kOscillators; ++i) {
    out.phase[i] = combine(s.phase[i], k1.phase[i], k2.phase[i], k3.phase[i], k4.phase[i]);
    out.amplitude[i] = combine(s.amplitude[i], k1.amplitude[i], k2.amplitude[i], k3.amplitude[i], k4.amplitude[i]);
    out.amplitude_rate[i] = combine(s.amplitude_rate[i], k1.amplitude_rate[i], k2.amplitude_rate[i],
                                    k3.amplitude_rate[i], k4.amplitude_rate[i]);
    out.offset[i] = combine(s.offset[i], k1.offset[i], k2.offset[i], k3.offset[i], k4.offset[i]);
  }
  return out;
}

}  // namespace detail

/// One RK4 step of the oscillator network.
inline CpgState cpg_step(const CpgState& state, const ControllerParams& params, const CpgNetworkConfig& net) {
  if (!state.finite()) throw NumericBlowup("cpg_step: non-finite input state");
  CpgState next = detail::rk4(state, params.omega, targets_of(params), net);
  if (!next.finite()) throw NumericBlowup("cpg_step: state became non-finite");
  return next;
}

/// Phases at the tripod biases, everything else at rest.
inline CpgState canonical_initial_state() {
  CpgState s;
  for (std::size_t l = 0; l < kLegs; ++l) {
    const double pv = in_tripod_a(l) ? 0.0 : std::numbers::pi;
    s.phase[vertical(l)] = pv;
    s.phase[horizontal(l)] = pv - std::numbers::pi / 2.0;
  }
  return s;
}

/// Post-transient motor setpoints, one row per oscillator.
struct MotorTrajectory {
  double dt = 0.0;
  double t0 = 0.0;
  Eigen::MatrixXd setpoints;  // kOscillators x T, rad

  std::size_t samples() const { return static_cast<std::size_t>(setpoints.cols()); }
  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  double vertical_at(std::size_t leg, std::size_t k) const {
    return setpoints(static_cast<Eigen::Index>(vertical(leg)), static_cast<Eigen::Index>(k));
  }
  double horizontal_at(std::size_t leg, std::size_t k) const {
    return setpoints(static_cast<Eigen::Index>(horizontal(leg)), static_cast<Eigen::Index>(k));
  }
};

/// Integrates from the canonical state and keeps samples from transient_cut
/// through duration inclusive.
inline MotorTrajectory simulate_cpg(const ControllerParams& params, const CpgNetworkConfig& net,
                                    const ControllerBox& box = default_controller_box()) {
  if (!box.contains(params.to_array())) throw InvalidArgument("simulate_cpg: controller parameters out of bounds");
  net.validate();
  const std::size_t total = net.total_steps();
  const std::size_t cut = net.transient_steps();
  const Targets targets = targets_of(params);

  MotorTrajectory traj;
  traj.dt = net.dt;
  traj.t0 = static_cast<double>(cut) * net.dt;
  traj.setpoints.resize(static_cast<Eigen::Index>(kOscillators), static_cast<Eigen::Index>(total - cut + 1));
  CpgState s = canonical_initial_state();
  for (std::size_t k = 0; k <= total; ++k) {
    if (k >= cut) {
      for (std::size_t i = 0; i < kOscillators; ++i)
        traj.setpoints(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - cut)) = s.output(i);
    }
    if (k == total) break;
    s = detail::rk4(s, params.omega, targets, net);
    if (!s.finite()) throw NumericBlowup("simulate_cpg: state became non-finite");
  }
  return traj;
}

inline void write_trajectory_csv(std::ostream& os, const MotorTrajectory& traj) {
  os << "t,leg,vertical_rad,horizontal_rad\n";
  os.precision(17);
  for (std::size_t k = 0; k < traj.samples(); ++k)
    for (std::size_t l = 0; l < kLegs; ++l)
      os << traj.time(k) << ',' << l << ',' << traj.vertical_at(l, k) << ',' << traj.horizontal_at(l, k) << '\n';
}

}  // namespace hpcbbo::cpg
