#pragma once

// Posterior-mean slices of the morphology GP over two leg ratios with the
// third held fixed. Values are rewards; plots use a colour domain of [0, 30],
// 0 being stationary and 30 far.

#include <ostream>

#include "hpcbbo/harness/runner.hpp"

namespace hpcbbo::harness {

inline constexpr double kSliceColourMin = 0.0;
inline constexpr double kSliceColourMax = 30.0;

struct SliceCell {
  MorphologyParams morph;
  double mean = 0.0;
};

/// res x res grid over the box of the two free ratios (end points included),
/// row-major with the lower free dimension varying slowest.
inline std::vector<SliceCell> gp_slice_grid(const gp::GpModel& model, const MorphologyBox& box, std::size_t fixed_dim,
                                            double fixed_value, std::size_t resolution) {
  if (model.dim() != kMorphologyDim) throw InvalidArgument("gp_slice_grid: model must be 3-dimensional");
  if (fixed_dim >= kMorphologyDim) throw InvalidArgument("gp_slice_grid: fixed_dim must be 0, 1 or 2");
  if (!(fixed_value >= box.lower[fixed_dim] && fixed_value <= box.upper[fixed_dim]))
    throw InvalidArgument("gp_slice_grid: fixed_value outside the leg-ratio bounds");
  if (resolution < 1) throw InvalidArgument("gp_slice_grid: resolution must be >= 1");
  std::array<std::size_t, 2> free{};
  for (std::size_t i = 0, k = 0; i < kMorphologyDim; ++i)
    if (i != fixed_dim) free[k++] = i;

  auto level = [&](std::size_t dim, std::size_t i) {
    if (resolution == 1) return 0.5 * (box.lower[dim] + box.upper[dim]);
    return box.lower[dim] + (box.upper[dim] - box.lower[dim]) * static_cast<double>(i) / static_cast<double>(resolution - 1);
  };

  const auto cells = static_cast<Eigen::Index>(resolution * resolution);
  gp::Matrix pts(static_cast<Eigen::Index>(kMorphologyDim), cells);
  std::vector<SliceCell> out(static_cast<std::size_t>(cells));
  for (std::size_t a = 0; a < resolution; ++a)
    for (std::size_t b = 0; b < resolution; ++b) {
      auto& cell = out[a * resolution + b];
      cell.morph.leg_ratios[fixed_dim] = fixed_value;
      cell.morph.leg_ratios[free[0]] = level(free[0], a);
      cell.morph.leg_ratios[free[1]] = level(free[1], b);
      pts.col(static_cast<Eigen::Index>(a * resolution + b)) = box.normalize(cell.morph.leg_ratios);
    }
  const auto [mean, var] = model.predict_batch(pts);
  for (Eigen::Index c = 0; c < cells; ++c) out[static_cast<std::size_t>(c)].mean = mean[c];
  return out;
}

inline void write_slice_csv(std::ostream& os, const std::vector<SliceCell>& cells) {
  os << "front,middle,rear,predicted_reward\n";
  const auto old = os.precision(17);
  for (const auto& c : cells)
    os << c.morph.leg_ratios[0] << ',' << c.morph.leg_ratios[1] << ',' << c.morph.leg_ratios[2] << ',' << c.mean << '\n';
  os.precision(old);
}

/// Morphology dataset of a batched run: each fabricated morphology with the
/// best reward its controller search reached.
inline gp::Dataset morphology_dataset(const RunTrace& trace, const MorphologyBox& box) {
  gp::Dataset data(kMorphologyDim);
  const auto& rec = trace.records;
  const auto best = best_per_morphology(rec);
  std::size_t g = 0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const bool fresh = i == 0 || rec[i].batch != rec[i - 1].batch || rec[i].morph_idx != rec[i - 1].morph_idx;
    if (fresh) data.add(box.normalize(rec[i].morph.leg_ratios), best[g++]);
  }
  return data;
}

/// Rebuilds the final morphology GP of a batched run from its trace and the
/// stored hyperparameters.
inline gp::GpModel rebuild_morphology_gp(const TraceFile& trace, const MorphologyModelFile& model) {
  if (trace.header.accounting != "batch") throw InvalidArgument("slice: trace is not from a batched run");
  const gp::Dataset data = morphology_dataset(trace.trace, model.bounds);
  if (data.empty()) throw InsufficientData("slice: trace has no morphologies");
  return gp::GpModel::build(data, model.hyper);
}

}  // namespace hpcbbo::harness
