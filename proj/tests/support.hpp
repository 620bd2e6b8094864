#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library's numerics.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "hpcbbo/gp.hpp"
#include "hpcbbo/surrogate.hpp"

namespace oracle {

inline double matern52(double sigma2, const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& ls) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) r2 += std::pow((a[i] - b[i]) / ls[i], 2);
  const double r = std::sqrt(r2);
  return sigma2 * (1.0 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

struct Posterior {
  double mean;
  double variance;
};

/// Posterior from an explicitly inverted covariance matrix. `jitter` is added
/// to the diagonal together with the noise.
inline Posterior dense_posterior(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys,
                                 const hpcbbo::gp::KernelHyperparams& h, double jitter, const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  double mu = 0.0;
  for (double y : ys) mu += y;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double y : ys) var += (y - mu) * (y - mu);
  double sd = std::sqrt(var / static_cast<double>(n));
  if (sd <= 1e-12) sd = 1.0;

  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd k(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = (ys[static_cast<std::size_t>(i)] - mu) / sd;
    k[i] = matern52(h.signal_variance, xs[static_cast<std::size_t>(i)], x, h.lengthscales);
    for (Eigen::Index j = 0; j < n; ++j)
      K(i, j) = matern52(h.signal_variance, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)], h.lengthscales);
    K(i, i) += h.noise_variance + jitter;
  }
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  const double m = (k.transpose() * Kinv * y)(0);
  const double v = h.signal_variance - (k.transpose() * Kinv * k)(0);
  return {mu + sd * m, std::max(0.0, v) * sd * sd};
}

inline double dense_lml(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys,
                        const hpcbbo::gp::KernelHyperparams& h, double jitter) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  double mu = 0.0;
  for (double y : ys) mu += y;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double y : ys) var += (y - mu) * (y - mu);
  double sd = std::sqrt(var / static_cast<double>(n));
  if (sd <= 1e-12) sd = 1.0;
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = (ys[static_cast<std::size_t>(i)] - mu) / sd;
    for (Eigen::Index j = 0; j < n; ++j)
      K(i, j) = matern52(h.signal_variance, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)], h.lengthscales);
    K(i, i) += h.noise_variance + jitter;
  }
  const auto lu = K.fullPivLu();
  return -0.5 * (y.transpose() * lu.inverse() * y)(0) - 0.5 * std::log(lu.determinant()) -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Critically damped amplitude from rest: r(t) = R (1 - (1 + a t / 2) exp(-a t / 2)).
inline double damped_amplitude(double target, double gain, double t) {
  return target * (1.0 - (1.0 + gain * t / 2.0) * std::exp(-gain * t / 2.0));
}

/// Frequency from upward crossings of the signal's midline, linearly
/// interpolated between samples. Returns 0 with fewer than two crossings.
inline double crossing_frequency(const std::vector<double>& s, double dt) {
  double lo = s.front(), hi = s.front();
  for (double v : s) lo = std::min(lo, v), hi = std::max(hi, v);
  const double mid = 0.5 * (lo + hi);
  std::vector<double> times;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double a = s[k - 1] - mid, b = s[k] - mid;
    if (a < 0.0 && b >= 0.0) times.push_back(dt * (static_cast<double>(k - 1) + a / (a - b)));
  }
  if (times.size() < 2) return 0.0;
  return static_cast<double>(times.size() - 1) / (times.back() - times.front());
}

inline double half_peak_to_peak(const std::vector<double>& s) {
  double lo = s.front(), hi = s.front();
  for (double v : s) lo = std::min(lo, v), hi = std::max(hi, v);
  return 0.5 * (hi - lo);
}

/// Gait reward recomputed from motor setpoints with a straightforward loop.
inline double gait_reward(const hpcbbo::MorphologyParams& m, const hpcbbo::cpg::MotorTrajectory& traj,
                          const hpcbbo::surrogate::SurrogateConfig& cfg) {
  const int legs = 6;
  double x = 0.0, heading = 0.0;
  for (std::size_t k = 0; k + 1 < traj.samples(); ++k) {
    double sum[2][2] = {{0, 0}, {0, 0}};
    int cnt[2][2] = {{0, 0}, {0, 0}};
    int down = 0;
    for (int l = 0; l < legs; ++l) {
      const double len = m.leg_ratios[static_cast<std::size_t>(l / 2)];
      const double v = traj.vertical_at(static_cast<std::size_t>(l), k);
      if (v - cfg.stance_shift * (len - 1.0) >= cfg.stance_threshold) continue;
      ++down;
      const double h0 = traj.horizontal_at(static_cast<std::size_t>(l), k);
      const double h1 = traj.horizontal_at(static_cast<std::size_t>(l), k + 1);
      const int side = l % 2;                                   // 0 left
      const int tripod = (l == 0 || l == 3 || l == 4) ? 0 : 1;  // 0 = {FL, MR, RL}
      sum[side][tripod] += -len * (std::sin(h1) - std::sin(h0)) / traj.dt;
      ++cnt[side][tripod];
    }
    double mean[2][2] = {{0, 0}, {0, 0}};
    double speed = 0.0;
    int groups = 0;
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t)
        if (cnt[s][t] > 0) {
          mean[s][t] = sum[s][t] / cnt[s][t];
          speed += mean[s][t];
          ++groups;
        }
    const double slip = down < static_cast<int>(cfg.min_stance_legs) ? cfg.slip_penalty : 1.0;
    if (groups > 0) speed = slip * speed / groups;
    const double left = slip * (mean[0][0] + mean[0][1]) * traj.dt;
    const double right = slip * (mean[1][0] + mean[1][1]) * traj.dt;
    x += speed * std::cos(heading) * traj.dt;
    heading += cfg.turn_sensitivity * (left - right);
  }
  return std::max(0.0, cfg.reward_scale * x);
}

}  // namespace oracle
