#pragma once

// Design-parameter blocks: the process-constrained morphology (leg-length
// ratios) and the freely adjustable CPG controller.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "hpcbbo/errors.hpp"

namespace hpcbbo {

inline constexpr std::size_t kMorphologyDim = 3;
inline constexpr std::size_t kControllerDim = 6;
inline constexpr std::size_t kJointDim = kMorphologyDim + kControllerDim;

/// Leg-pair length ratios relative to a normalized leg length.
struct MorphologyParams {
  std::array<double, kMorphologyDim> leg_ratios{1.0, 1.0, 1.0};  // front, middle, rear

  double front() const { return leg_ratios[0]; }
  double middle() const { return leg_ratios[1]; }
  double rear() const { return leg_ratios[2]; }

  friend bool operator==(const MorphologyParams&, const MorphologyParams&) = default;
};

struct ControllerParams {
  double omega = 1.0;              // Hz
  double r_vertical = 0.3;         // rad
  double offset_vertical = 0.0;    // rad
  double offset_horizontal = 0.0;  // rad
  double x_left = 0.3;             // rad
  double x_right = 0.3;            // rad

  std::array<double, kControllerDim> to_array() const {
    return {omega, r_vertical, offset_vertical, offset_horizontal, x_left, x_right};
  }
  static ControllerParams from_array(const std::array<double, kControllerDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }

  friend bool operator==(const ControllerParams&, const ControllerParams&) = default;
};

/// Box constraints for one parameter block, in physical units.
template <std::size_t N>
struct ParamBox {
  std::array<double, N> lower{};
  std::array<double, N> upper{};

  void validate() const {
    for (std::size_t i = 0; i < N; ++i)
      if (!(lower[i] < upper[i])) throw InvalidArgument("ParamBox: lower must be strictly below upper");
  }

  bool contains(const std::array<double, N>& v) const {
    for (std::size_t i = 0; i < N; ++i)
      if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
    return true;
  }

  Eigen::VectorXd normalize(const std::array<double, N>& v) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) out[static_cast<Eigen::Index>(i)] = (v[i] - lower[i]) / (upper[i] - lower[i]);
    return out;
  }

  /// Maps unit-cube coordinates back to physical units, clamping to the box.
  std::array<double, N> denormalize(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      const double t = std::clamp(u[static_cast<Eigen::Index>(i)], 0.0, 1.0);
      out[i] = lower[i] + t * (upper[i] - lower[i]);
    }
    return out;
  }

  friend bool operator==(const ParamBox&, const ParamBox&) = default;
};

using MorphologyBox = ParamBox<kMorphologyDim>;
using ControllerBox = ParamBox<kControllerDim>;

inline MorphologyBox default_morphology_box() { return {{0.5, 0.5, 0.5}, {1.5, 1.5, 1.5}}; }

/// omega, r_vertical, offset_vertical, offset_horizontal, x_left, x_right.
inline ControllerBox default_controller_box() {
  return {{0.1, 0.0, -0.3, -0.3, 0.0, 0.0}, {3.0, 0.6, 0.3, 0.3, 0.6, 0.6}};
}

struct DesignSpace {
  MorphologyBox morphology = default_morphology_box();
  ControllerBox controller = default_controller_box();

  void validate() const {
    morphology.validate();
    controller.validate();
  }

  Eigen::VectorXd normalize(const MorphologyParams& m) const { return morphology.normalize(m.leg_ratios); }
  Eigen::VectorXd normalize(const ControllerParams& c) const { return controller.normalize(c.to_array()); }
  MorphologyParams morphology_at(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    return {morphology.denormalize(u)};
  }
  ControllerParams controller_at(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    return ControllerParams::from_array(controller.denormalize(u));
  }

  /// Joint layout used by every joint GP: controller first, morphology last.
  Eigen::VectorXd joint(const ControllerParams& c, const MorphologyParams& m) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(kJointDim));
    out << normalize(c), normalize(m);
    return out;
  }

  friend bool operator==(const DesignSpace&, const DesignSpace&) = default;
};

}  // namespace hpcbbo
