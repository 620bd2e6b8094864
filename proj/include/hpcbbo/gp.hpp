#pragma once

// Gaussian-process regression: Matern 5/2 ARD kernel, Cholesky-based
// posterior, multi-start log-marginal-likelihood fitting and rank-one
// conditioning for hallucinated observations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "hpcbbo/errors.hpp"
#include "hpcbbo/rng.hpp"

namespace hpcbbo::gp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Inputs closer than this (Euclidean, normalized units) are merged.
inline constexpr double kDuplicateTolerance = 1e-9;
inline constexpr double kInitialJitter = 1e-10;
inline constexpr double kMaxJitter = 1e-4;

/// Search box for the hyperparameters, in natural-log space.
struct HyperBounds {
  double log_lengthscale_lo = std::log(0.01);
  double log_lengthscale_hi = std::log(10.0);
  double log_signal_lo = std::log(0.01);
  double log_signal_hi = std::log(100.0);
  double log_noise_lo = std::log(1e-6);
  double log_noise_hi = std::log(1.0);
};

// ---------------------------------------------------------------------------

/// Ordered (input, reward) pairs. Inputs within kDuplicateTolerance of an
/// existing input are folded into it by averaging their rewards.
class Dataset {
public:
  Dataset() = default;
  explicit Dataset(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("Dataset: dimension must be >= 1");
  }

  /// Returns the index the observation landed on and whether it was merged.
  std::pair<std::size_t, bool> add(const Vector& x, double reward) {
    if (dim_ == 0) throw InvalidArgument("Dataset: dimension not set");
    if (static_cast<std::size_t>(x.size()) != dim_)
      throw InvalidArgument("Dataset: input dimension mismatch");
    if (!x.allFinite()) throw InvalidArgument("Dataset: non-finite input");
    if (!std::isfinite(reward)) throw InvalidArgument("Dataset: non-finite reward");
    if (auto idx = find(x)) {
      const double c = static_cast<double>(counts_[*idx]);
      rewards_[*idx] = (rewards_[*idx] * c + reward) / (c + 1.0);
      ++counts_[*idx];
      return {*idx, true};
    }
    inputs_.push_back(x);
    rewards_.push_back(reward);
    counts_.push_back(1);
    return {inputs_.size() - 1, false};
  }

  std::optional<std::size_t> find(const Vector& x) const {
    for (std::size_t i = 0; i < inputs_.size(); ++i)
      if ((inputs_[i] - x).norm() <= kDuplicateTolerance) return i;
    return std::nullopt;
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return inputs_.size(); }
  bool empty() const noexcept { return inputs_.empty(); }
  const std::vector<Vector>& inputs() const noexcept { return inputs_; }
  const std::vector<double>& rewards() const noexcept { return rewards_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  /// Inputs as a dim x n matrix (one column per point).
  Matrix input_matrix() const {
    Matrix m(dim_, inputs_.size());
    for (std::size_t i = 0; i < inputs_.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = inputs_[i];
    return m;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dim_ == b.dim_ && a.inputs_ == b.inputs_ && a.rewards_ == b.rewards_ && a.counts_ == b.counts_;
  }

private:
  std::size_t dim_ = 0;
  std::vector<Vector> inputs_;
  std::vector<double> rewards_;
  std::vector<std::size_t> counts_;
};

struct KernelHyperparams {
  double signal_variance = 1.0;
  Vector lengthscales;
  double noise_variance = 1e-6;

  static KernelHyperparams isotropic(std::size_t dim, double signal, double lengthscale, double noise) {
    return {signal, Vector::Constant(static_cast<Eigen::Index>(dim), lengthscale), noise};
  }

  void validate(std::size_t dim) const {
    auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!ok(signal_variance) || !ok(noise_variance))
      throw InvalidArgument("KernelHyperparams: variances must be positive and finite");
    if (static_cast<std::size_t>(lengthscales.size()) != dim)
      throw InvalidArgument("KernelHyperparams: lengthscale count does not match input dimension");
    for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
      if (!ok(lengthscales[i])) throw InvalidArgument("KernelHyperparams: lengthscales must be positive and finite");
  }

  friend bool operator==(const KernelHyperparams& a, const KernelHyperparams& b) {
    return a.signal_variance == b.signal_variance && a.noise_variance == b.noise_variance &&
           a.lengthscales.size() == b.lengthscales.size() && a.lengthscales == b.lengthscales;
  }
};

namespace detail {

inline double matern52_from_r(double signal_variance, double r) {
  const double s5r = std::sqrt(5.0) * r;
  return signal_variance * (1.0 + s5r + 5.0 * r * r / 3.0) * std::exp(-s5r);
}

inline Matrix scale_columns(const Matrix& x, const KernelHyperparams& h) {
  return h.lengthscales.cwiseInverse().asDiagonal() * x;
}

/// Matern 5/2 applied in place to a matrix of squared scaled distances.
inline void matern52_from_r2(Matrix& r2, double signal_variance) {
  const auto s5r = (5.0 * r2.array()).sqrt();
  r2 = signal_variance * (1.0 + s5r + s5r.square() / 3.0) * (-s5r).exp();
}

/// Squared distances between the columns of two pre-scaled blocks. Both are
/// centred on the first column of `as` to limit cancellation.
inline Matrix squared_distances(const Matrix& as, const Matrix& bs) {
  const Vector centre = as.cols() > 0 ? Vector(as.col(0)) : Vector::Zero(as.rows());
  const Matrix ac = as.colwise() - centre;
  const Matrix bc = bs.colwise() - centre;
  Matrix r2 = -2.0 * (ac.transpose() * bc);
  r2.colwise() += ac.colwise().squaredNorm().transpose();
  r2.rowwise() += bc.colwise().squaredNorm();
  return r2.cwiseMax(0.0);
}

/// Covariance between the columns of a (d x n) and b (d x m).
inline Matrix cross_covariance(const Matrix& a, const Matrix& b, const KernelHyperparams& h) {
  Matrix k = squared_distances(scale_columns(a, h), scale_columns(b, h));
  matern52_from_r2(k, h.signal_variance);
  return k;
}

inline Matrix gram(const Matrix& x, const KernelHyperparams& h) {
  const Matrix xs = scale_columns(x, h);
  Matrix k = squared_distances(xs, xs);
  // Mirror the lower triangle by hand; self-assignment through Eigen's
  // triangular views aliases.
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    k(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < k.rows(); ++i) k(j, i) = k(i, j);
  }
  matern52_from_r2(k, h.signal_variance);
  return k;
}

struct Factor {
  Matrix lower;
  double jitter = 0.0;
};

/// Cholesky of gram + (noise + jitter) I with jitter escalating 1e-10 .. 1e-4.
inline std::optional<Factor> factorize(const Matrix& gram_matrix, double noise) {
  for (double jitter = kInitialJitter; jitter <= kMaxJitter * 1.0000001; jitter *= 10.0) {
    Matrix k = gram_matrix;
    k.diagonal().array() += noise + jitter;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success) continue;
    Matrix l = llt.matrixL();
    if (!l.allFinite() || (l.diagonal().array() <= 0.0).any()) continue;
    return Factor{std::move(l), jitter};
  }
  return std::nullopt;
}

struct Standardization {
  double mean = 0.0;
  double std = 1.0;
};

inline Standardization standardization_of(const std::vector<double>& y) {
  if (y.empty()) return {};
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  const double sd = std::sqrt(var);
  return {mean, sd > 1e-12 ? sd : 1.0};
}

inline Vector standardized(const std::vector<double>& y, const Standardization& s) {
  Vector out(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<Eigen::Index>(i)] = (y[i] - s.mean) / s.std;
  return out;
}

/// LML of already-standardized targets; nullopt when the factorization fails.
inline std::optional<double> lml_standardized(const Matrix& x, const Vector& y, const KernelHyperparams& h) {
  auto f = factorize(gram(x, h), h.noise_variance);
  if (!f) return std::nullopt;
  const Vector w = f->lower.triangularView<Eigen::Lower>().solve(y);
  const double log_det = 2.0 * f->lower.diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  return -0.5 * w.squaredNorm() - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

using detail::Standardization;

inline void check_dim(const Vector& x, std::size_t dim, const char* who) {
  if (static_cast<std::size_t>(x.size()) != dim) throw InvalidArgument(std::string(who) + ": dimension mismatch");
}

/// Matern 5/2 ARD covariance.
inline double kernel_eval(const Vector& x1, const Vector& x2, const KernelHyperparams& hyper) {
  const auto d = static_cast<std::size_t>(hyper.lengthscales.size());
  check_dim(x1, d, "kernel_eval");
  check_dim(x2, d, "kernel_eval");
  return detail::cross_covariance(x1, x2, hyper)(0, 0);
}

/// Log marginal likelihood of the standardized rewards.
inline double log_marginal_likelihood(const Dataset& data, const KernelHyperparams& hyper) {
  if (data.empty()) throw InvalidArgument("log_marginal_likelihood: empty dataset");
  hyper.validate(data.dim());
  const auto s = detail::standardization_of(data.rewards());
  auto v = detail::lml_standardized(data.input_matrix(), detail::standardized(data.rewards(), s), hyper);
  if (!v) throw IllConditionedModel("log_marginal_likelihood: factorization failed at maximum jitter");
  return *v;
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// ---------------------------------------------------------------------------

/// Fitted GP. Immutable after construction; conditioning returns a new model.
class GpModel {
public:
  /// Factorizes `data` under fixed hyperparameters. Rewards are standardized
  /// with their own statistics unless `standardization` is given.
  static GpModel build(Dataset data, KernelHyperparams hyper,
                       std::optional<Standardization> standardization = std::nullopt) {
    hyper.validate(data.dim());
    GpModel m;
    m.hyper_ = std::move(hyper);
    m.stdz_ = standardization ? *standardization : detail::standardization_of(data.rewards());
    m.data_ = std::move(data);
    m.refactor();
    return m;
  }

  /// Prior-only model with no observations.
  static GpModel prior(std::size_t dim, KernelHyperparams hyper, Standardization s = {}) {
    return build(Dataset(dim), std::move(hyper), s);
  }

  const Dataset& data() const noexcept { return data_; }
  const KernelHyperparams& hyper() const noexcept { return hyper_; }
  const Standardization& standardization() const noexcept { return stdz_; }
  const Matrix& chol() const noexcept { return lower_; }
  const Vector& alpha() const noexcept { return alpha_; }
  double jitter() const noexcept { return jitter_; }
  std::size_t dim() const noexcept { return data_.dim(); }
  std::size_t size() const noexcept { return data_.size(); }
  double prior_variance() const { return hyper_.signal_variance * stdz_.std * stdz_.std; }

  Prediction predict(const Vector& x) const {
    check_dim(x, dim(), "predict");
    const auto [mean, var] = predict_batch(x);
    return {mean[0], var[0]};
  }

  /// Posterior at every column of `points` (dim x m).
  std::pair<Vector, Vector> predict_batch(const Matrix& points) const {
    if (static_cast<std::size_t>(points.rows()) != dim()) throw InvalidArgument("predict_batch: dimension mismatch");
    const Eigen::Index m = points.cols();
    const double s2 = stdz_.std * stdz_.std;
    if (size() == 0)
      return {Vector::Constant(m, stdz_.mean), Vector::Constant(m, hyper_.signal_variance * s2)};
    Matrix k;
    Vector mean = posterior_mean(points, k);
    return {std::move(mean), posterior_variance(k)};
  }

  /// Posterior means at the columns of `points`; the raw cross-covariance
  /// (n x m) is left in `cross` for a later posterior_variance call.
  Vector posterior_mean(const Matrix& points, Matrix& cross) const {
    if (static_cast<std::size_t>(points.rows()) != dim()) throw InvalidArgument("posterior_mean: dimension mismatch");
    if (size() == 0) {
      cross.resize(0, points.cols());
      return Vector::Constant(points.cols(), stdz_.mean);
    }
    cross = detail::cross_covariance(x_, points, hyper_);
    return (cross.transpose() * alpha_).array() * stdz_.std + stdz_.mean;
  }

  /// Posterior variances from a cross-covariance block; overwrites `cross`.
  Vector posterior_variance(Matrix& cross) const {
    const double s2 = stdz_.std * stdz_.std;
    if (size() == 0) return Vector::Constant(cross.cols(), hyper_.signal_variance * s2);
    lower_.triangularView<Eigen::Lower>().solveInPlace(cross);
    return (hyper_.signal_variance - cross.colwise().squaredNorm().transpose().array()).cwiseMax(0.0) * s2;
  }

  /// New model with (x, y) appended under the same hyperparameters and
  /// standardization. Rank-one extension of the factor; falls back to a full
  /// refactorization when the extension loses positive definiteness.
  GpModel with_observation(const Vector& x, double y) const {
    check_dim(x, dim(), "with_observation");
    GpModel m = *this;
    const auto [idx, merged] = m.data_.add(x, y);
    if (merged) {
      m.y_[static_cast<Eigen::Index>(idx)] = (m.data_.rewards()[idx] - stdz_.mean) / stdz_.std;
      m.solve_alpha();
      return m;
    }
    const Eigen::Index n = x_.cols();
    Vector k = n > 0 ? Vector(detail::cross_covariance(x_, x, hyper_).col(0)) : Vector(0);
    if (n > 0) lower_.triangularView<Eigen::Lower>().solveInPlace(k);
    const double d2 = hyper_.signal_variance + hyper_.noise_variance + jitter_ - k.squaredNorm();
    m.x_.conservativeResize(Eigen::NoChange, n + 1);
    m.x_.col(n) = x;
    m.y_.conservativeResize(n + 1);
    m.y_[n] = (y - stdz_.mean) / stdz_.std;
    if (!(d2 > 0.0) || !std::isfinite(d2)) {
      m.refactor();
      return m;
    }
    m.lower_.conservativeResize(n + 1, n + 1);
    m.lower_.col(n).setZero();
    m.lower_.row(n).head(n) = k.transpose();
    m.lower_(n, n) = std::sqrt(d2);
    m.solve_alpha();
    return m;
  }

private:
  GpModel() = default;

  void refactor() {
    x_ = data_.input_matrix();
    y_ = detail::standardized(data_.rewards(), stdz_);
    if (data_.empty()) {
      lower_.resize(0, 0);
      alpha_.resize(0);
      jitter_ = kInitialJitter;
      return;
    }
    auto f = detail::factorize(detail::gram(x_, hyper_), hyper_.noise_variance);
    if (!f) throw IllConditionedModel("GpModel: factorization failed at maximum jitter");
    lower_ = std::move(f->lower);
    jitter_ = f->jitter;
    solve_alpha();
  }

  void solve_alpha() {
    alpha_ = lower_.triangularView<Eigen::Lower>().solve(y_);
    lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
  }

  Dataset data_;
  KernelHyperparams hyper_;
  Standardization stdz_;
  Matrix x_;
  Vector y_;
  Matrix lower_;
  Vector alpha_;
  double jitter_ = kInitialJitter;
};

inline Prediction predict(const GpModel& model, const Vector& x) { return model.predict(x); }

/// Conditions on a stand-in observation without touching hyperparameters.
inline GpModel condition_on_hallucination(const GpModel& model, const Vector& x, double h) {
  if (!std::isfinite(h)) throw InvalidArgument("condition_on_hallucination: non-finite reward");
  return model.with_observation(x, h);
}

// ---------------------------------------------------------------------------

struct FitOptions {
  std::size_t restarts = 10;
  /// Coordinate polls per restart; each poll costs at most two likelihood evaluations.
  std::size_t iterations = 100;
  /// Random subset size used for the likelihood search (0 = all points).
  std::size_t max_points = 0;
  /// When set, the first restart starts here instead of the box center.
  std::optional<KernelHyperparams> warm_start;
  HyperBounds bounds;
};

namespace detail {

inline Vector pack(const KernelHyperparams& h) {
  const auto d = h.lengthscales.size();
  Vector t(d + 2);
  t.head(d) = h.lengthscales.array().log();
  t[d] = std::log(h.signal_variance);
  t[d + 1] = std::log(h.noise_variance);
  return t;
}

inline KernelHyperparams unpack(const Vector& t) {
  const auto d = t.size() - 2;
  return {std::exp(t[d]), t.head(d).array().exp(), std::exp(t[d + 1])};
}

inline std::pair<Vector, Vector> box(std::size_t dim, const HyperBounds& b) {
  const auto d = static_cast<Eigen::Index>(dim);
  Vector lo(d + 2), hi(d + 2);
  lo.head(d).setConstant(b.log_lengthscale_lo);
  hi.head(d).setConstant(b.log_lengthscale_hi);
  lo[d] = b.log_signal_lo;
  hi[d] = b.log_signal_hi;
  lo[d + 1] = b.log_noise_lo;
  hi[d + 1] = b.log_noise_hi;
  return {lo, hi};
}

}  // namespace detail

/// Maximizes the log marginal likelihood with multi-start coordinate pattern
/// search in log-hyperparameter space and returns the factorized best model.
inline GpModel fit(const Dataset& data, Rng& rng, const FitOptions& opts = {}) {
  if (data.empty()) throw InvalidArgument("fit: empty dataset");
  if (opts.restarts == 0) throw InvalidArgument("fit: restarts must be >= 1");
  const std::size_t dim = data.dim();
  const auto stdz = detail::standardization_of(data.rewards());
  Matrix x = data.input_matrix();
  Vector y = detail::standardized(data.rewards(), stdz);

  if (opts.max_points > 0 && data.size() > opts.max_points) {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < opts.max_points; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    idx.resize(opts.max_points);
    std::sort(idx.begin(), idx.end());
    Matrix xs(x.rows(), static_cast<Eigen::Index>(idx.size()));
    Vector ys(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xs.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(idx[i]));
      ys[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
    }
    x = std::move(xs);
    y = std::move(ys);
  }

  const auto [lo, hi] = detail::box(dim, opts.bounds);
  const Eigen::Index p = lo.size();
  auto objective = [&](const Vector& t) {
    auto v = detail::lml_standardized(x, y, detail::unpack(t));
    return v ? *v : -std::numeric_limits<double>::infinity();
  };

  Vector best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    Vector theta(p);
    if (r == 0) {
      theta = opts.warm_start ? detail::pack(*opts.warm_start).cwiseMax(lo).cwiseMin(hi) : Vector(0.5 * (lo + hi));
    } else {
      for (Eigen::Index i = 0; i < p; ++i) theta[i] = rng.uniform(lo[i], hi[i]);
    }
    double value = objective(theta);
    Vector step = 0.25 * (hi - lo);
    bool improved = false;
    Eigen::Index coord = 0;
    for (std::size_t it = 0; it < opts.iterations; ++it) {
      for (double dir : {1.0, -1.0}) {
        Vector trial = theta;
        trial[coord] = std::clamp(theta[coord] + dir * step[coord], lo[coord], hi[coord]);
        if (trial[coord] == theta[coord]) continue;
        const double v = objective(trial);
        if (v > value) {
          theta = std::move(trial);
          value = v;
          improved = true;
          break;
        }
      }
      if (++coord == p) {
        coord = 0;
        if (!improved) {
          step *= 0.5;
          if (step.maxCoeff() < 1e-4) break;
        }
        improved = false;
      }
    }
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }
  if (!std::isfinite(best_value)) throw IllConditionedModel("fit: every restart failed to factorize");
  return GpModel::build(data, detail::unpack(best_theta));
}

inline GpModel fit(const Dataset& data, std::size_t restarts, Rng& rng) {
  FitOptions opts;
  opts.restarts = restarts;
  return fit(data, rng, opts);
}

}  // namespace hpcbbo::gp
