#pragma once

// (mu/mu_w, lambda)-CMA-ES with the default strategy parameters of Hansen's
// tutorial. Box constraints are handled by clamping candidates before they
// are evaluated; the unclamped samples drive the update.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numeric>

#include "hpcbbo/baselines.hpp"

namespace hpcbbo {

inline std::size_t cmaes_population_size(std::size_t dim) {
  return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

class Cmaes {
public:
  Cmaes(gp::Vector mean, double sigma0, std::uint64_t seed)
      : n_(static_cast<std::size_t>(mean.size())), sigma0_(sigma0), mean_(std::move(mean)), rng_(seed) {
    if (n_ == 0) throw InvalidArgument("Cmaes: empty start point");
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw InvalidArgument("Cmaes: sigma0 must be positive");
    const double n = static_cast<double>(n_);
    lambda_ = cmaes_population_size(n_);
    mu_ = lambda_ / 2;
    weights_.resize(static_cast<Eigen::Index>(mu_));
    for (std::size_t i = 0; i < mu_; ++i)
      weights_[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(mu_) + 0.5) - std::log(static_cast<double>(i + 1));
    weights_ /= weights_.sum();
    mueff_ = 1.0 / weights_.squaredNorm();
    cc_ = (4.0 + mueff_ / n) / (n + 4.0 + 2.0 * mueff_ / n);
    cs_ = (mueff_ + 2.0) / (n + mueff_ + 5.0);
    c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mueff_);
    cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((n + 2.0) * (n + 2.0) + mueff_));
    damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (n + 1.0)) - 1.0) + cs_;
    chin_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    reset_distribution();
  }

  std::size_t lambda() const noexcept { return lambda_; }
  std::size_t mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  const gp::Vector& mean() const noexcept { return mean_; }
  std::size_t restarts() const noexcept { return restarts_; }

  /// Samples a generation, one column per candidate.
  gp::Matrix ask() {
    const auto n = static_cast<Eigen::Index>(n_);
    gp::Matrix pop(n, static_cast<Eigen::Index>(lambda_));
    for (Eigen::Index k = 0; k < pop.cols(); ++k) {
      gp::Vector z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = rng_.normal();
      pop.col(k) = mean_ + sigma_ * (basis_ * (scales_.asDiagonal() * z));
    }
    return pop;
  }

  /// Updates the distribution from a generation and its costs (lower is better).
  void tell(const gp::Matrix& pop, const std::vector<double>& costs) {
    const auto n = static_cast<Eigen::Index>(n_);
    std::vector<std::size_t> order(costs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });

    const gp::Vector old_mean = mean_;
    gp::Matrix steps(n, static_cast<Eigen::Index>(mu_));
    for (std::size_t i = 0; i < mu_; ++i)
      steps.col(static_cast<Eigen::Index>(i)) = (pop.col(static_cast<Eigen::Index>(order[i])) - old_mean) / sigma_;
    const gp::Vector step = steps * weights_;
    mean_ = old_mean + sigma_ * step;

    const gp::Vector whitened = basis_ * (scales_.cwiseInverse().asDiagonal() * (basis_.transpose() * step));
    ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * whitened;
    ++generation_;
    const double ps_norm = ps_.norm();
    const double decay = 1.0 - std::pow(1.0 - cs_, 2.0 * static_cast<double>(generation_));
    const bool hsig = ps_norm / std::sqrt(decay) / chin_ < 1.4 + 2.0 / (static_cast<double>(n_) + 1.0);
    pc_ = (1.0 - cc_) * pc_ + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * step;

    const double delta = hsig ? 0.0 : cc_ * (2.0 - cc_);
    cov_ = (1.0 - c1_ - cmu_) * cov_ + c1_ * (pc_ * pc_.transpose() + delta * cov_) +
           cmu_ * steps * weights_.asDiagonal() * steps.transpose();
    sigma_ *= std::exp((cs_ / damps_) * (ps_norm / chin_ - 1.0));

    if (!decompose()) {
      ++restarts_;
      reset_distribution();
    }
  }

private:
  void reset_distribution() {
    const auto n = static_cast<Eigen::Index>(n_);
    sigma_ = sigma0_;
    cov_ = gp::Matrix::Identity(n, n);
    basis_ = gp::Matrix::Identity(n, n);
    scales_ = gp::Vector::Ones(n);
    pc_ = gp::Vector::Zero(n);
    ps_ = gp::Vector::Zero(n);
    generation_ = 0;
  }

  /// Eigendecomposition of C; false when the distribution has degenerated.
  bool decompose() {
    if (!cov_.allFinite() || !mean_.allFinite() || !std::isfinite(sigma_) || !(sigma_ > 0.0)) return false;
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<gp::Matrix> eig(cov_);
    if (eig.info() != Eigen::Success) return false;
    const gp::Vector ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > 1e14) return false;
    if (sigma_ * std::sqrt(ev.maxCoeff()) < 1e-15) return false;
    basis_ = eig.eigenvectors();
    scales_ = ev.cwiseSqrt();
    return true;
  }

  std::size_t n_;
  double sigma0_;
  gp::Vector mean_;
  Rng rng_;
  std::size_t lambda_ = 0, mu_ = 0;
  gp::Vector weights_;
  double mueff_ = 0, cc_ = 0, cs_ = 0, c1_ = 0, cmu_ = 0, damps_ = 0, chin_ = 0;
  double sigma_ = 0;
  gp::Matrix cov_, basis_;
  gp::Vector scales_, pc_, ps_;
  std::size_t generation_ = 0;
  std::size_t restarts_ = 0;
};

/// Minimizes `cost` over the box for `budget` evaluations. The final
/// generation is truncated to the budget. Returns the best cost seen.
inline double cmaes_minimize(const std::function<double(const gp::Vector&)>& cost, const gp::Vector& x0,
                             const Bounds& bounds, double sigma0, std::size_t budget, std::uint64_t seed) {
  bounds.validate();
  Cmaes es(x0, sigma0, seed);
  double best = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  while (used < budget) {
    const gp::Matrix pop = es.ask();
    std::vector<double> costs;
    for (Eigen::Index k = 0; k < pop.cols() && used < budget; ++k, ++used) {
      const gp::Vector x = pop.col(k).cwiseMax(bounds.lower).cwiseMin(bounds.upper);
      costs.push_back(cost(x));
      best = std::min(best, costs.back());
    }
    if (costs.size() < static_cast<std::size_t>(pop.cols())) break;
    es.tell(pop, costs);
  }
  return best;
}

struct CmaesConfig : FlatBudgetConfig {
  /// Initial step size in normalized units.
  double sigma0 = 0.3;
};

inline void cmaes_run_into(RunTrace& trace, const Evaluator& objective, const CmaesConfig& cfg) {
  cfg.validate();
  const GuardedObjective guarded{objective, trace};
  const DesignSpace& space = cfg.space;
  Rng start_rng(derive_seed(cfg.seed, "cmaes-start"));
  const gp::Vector x0 = detail::uniform_point(kJointDim, start_rng);
  auto cost = [&](const gp::Vector& u) {
    const ControllerParams c = space.controller_at(u.head(kControllerDim));
    const MorphologyParams m = space.morphology_at(u.tail(kMorphologyDim));
    const double y = guarded(m, c);
    detail::push_flat(trace, Phase::controller_opt, m, c, y);
    return -y;
  };
  cmaes_minimize(cost, x0, Bounds::unit(kJointDim), cfg.sigma0, cfg.budget, derive_seed(cfg.seed, "cmaes"));
}

inline RunTrace cmaes_run(const Evaluator& objective, const CmaesConfig& cfg) {
  RunTrace trace;
  cmaes_run_into(trace, objective, cfg);
  return trace;
}

}  // namespace hpcbbo
