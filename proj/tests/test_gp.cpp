#include <gtest/gtest.h>

#include "hpcbbo/gp.hpp"
#include "support.hpp"

using namespace hpcbbo;
using gp::Dataset;
using gp::GpModel;
using gp::KernelHyperparams;
using gp::Vector;

namespace {

Vector random_point(std::size_t d, Rng& rng) {
  Vector x(static_cast<Eigen::Index>(d));
  for (auto& v : x) v = rng.uniform();
  return x;
}

KernelHyperparams random_hyper(std::size_t d, Rng& rng) {
  Vector ls(static_cast<Eigen::Index>(d));
  for (auto& v : ls) v = std::exp(rng.uniform(std::log(0.05), std::log(3.0)));
  return {std::exp(rng.uniform(std::log(0.1), std::log(10.0))), ls, std::exp(rng.uniform(std::log(1e-6), std::log(0.1)))};
}

struct Sample {
  Dataset data;
  std::vector<Vector> xs;
  std::vector<double> ys;
};

Sample random_dataset(std::size_t d, std::size_t n, Rng& rng) {
  Sample s{Dataset(d), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = random_point(d, rng);
    const double y = rng.uniform(-5.0, 30.0);
    s.data.add(x, y);
    s.xs.push_back(x);
    s.ys.push_back(y);
  }
  return s;
}

}  // namespace

TEST(Kernel, MaternClosedForm1d) {
  const KernelHyperparams h{2.0, Vector::Constant(1, 0.5), 1e-6};
  EXPECT_NEAR(gp::kernel_eval(Vector::Constant(1, 0.0), Vector::Constant(1, 0.3), h), 1.537986218503236, 1e-12);
}

TEST(Kernel, MaternArd2d) {
  KernelHyperparams h{1.5, Vector(2), 1e-6};
  h.lengthscales << 0.5, 2.0;
  Vector a(2), b(2);
  a << 0.1, 0.2;
  b << 0.4, -0.6;
  EXPECT_NEAR(gp::kernel_eval(a, b, h), 1.0405947596972536, 1e-12);
}

TEST(Kernel, SymmetricAndBoundedBySignal) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + rng.index(9);
    const auto h = random_hyper(d, rng);
    const Vector a = random_point(d, rng), b = random_point(d, rng);
    const double kab = gp::kernel_eval(a, b, h);
    EXPECT_NEAR(kab, gp::kernel_eval(b, a, h), 1e-14);
    EXPECT_LE(kab, h.signal_variance * (1 + 1e-12));
    EXPECT_GT(kab, 0.0);
    EXPECT_NEAR(kab, oracle::matern52(h.signal_variance, a, b, h.lengthscales), 1e-10 * h.signal_variance);
    EXPECT_DOUBLE_EQ(gp::kernel_eval(a, a, h), h.signal_variance);
  }
}

TEST(Kernel, RejectsMismatchedDimension) {
  const auto h = KernelHyperparams::isotropic(3, 1.0, 0.3, 1e-6);
  EXPECT_THROW(gp::kernel_eval(Vector::Zero(2), Vector::Zero(3), h), InvalidArgument);
}

TEST(Hyperparams, ValidateRejectsNonPositive) {
  auto h = KernelHyperparams::isotropic(2, 1.0, 0.3, 1e-6);
  EXPECT_NO_THROW(h.validate(2));
  EXPECT_THROW(h.validate(3), InvalidArgument);
  h.signal_variance = 0.0;
  EXPECT_THROW(h.validate(2), InvalidArgument);
  h = KernelHyperparams::isotropic(2, 1.0, -0.3, 1e-6);
  EXPECT_THROW(h.validate(2), InvalidArgument);
}

TEST(Dataset, MergesNearDuplicatesByAveraging) {
  Dataset d(2);
  Vector x(2);
  x << 0.25, 0.75;
  EXPECT_FALSE(d.add(x, 10.0).second);
  const auto [idx, merged] = d.add(x + Vector::Constant(2, 1e-11), 20.0);
  EXPECT_TRUE(merged);
  EXPECT_EQ(idx, 0u);
  EXPECT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.rewards()[0], 15.0);
  d.add(x, 30.0);
  EXPECT_DOUBLE_EQ(d.rewards()[0], 20.0);
  EXPECT_EQ(d.counts()[0], 3u);
  EXPECT_FALSE(d.add(x + Vector::Constant(2, 1e-6), 0.0).second);
  EXPECT_EQ(d.size(), 2u);
}

TEST(Dataset, RejectsBadInput) {
  Dataset d(2);
  EXPECT_THROW(d.add(Vector::Zero(3), 1.0), InvalidArgument);
  EXPECT_THROW(d.add(Vector::Zero(2), std::nan("")), InvalidArgument);
  EXPECT_THROW(d.add(Vector::Constant(2, INFINITY), 1.0), InvalidArgument);
}

TEST(Posterior, MatchesDenseInverse) {
  Rng rng(2024);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.index(9), n = 1 + rng.index(5);
    const auto s = random_dataset(d, n, rng);
    const auto h = random_hyper(d, rng);
    const GpModel m = GpModel::build(s.data, h);
    for (int q = 0; q < 5; ++q) {
      const Vector x = q == 0 ? s.xs[0] : random_point(d, rng);
      const auto p = m.predict(x);
      const auto o = oracle::dense_posterior(s.xs, s.ys, h, m.jitter(), x);
      EXPECT_NEAR(p.mean, o.mean, 1e-8);
      EXPECT_NEAR(p.variance, o.variance, 1e-8);
    }
  }
}

TEST(Posterior, BatchAgreesWithSinglePoint) {
  Rng rng(5);
  const auto s = random_dataset(4, 30, rng);
  const GpModel m = GpModel::build(s.data, random_hyper(4, rng));
  gp::Matrix pts(4, 20);
  for (Eigen::Index c = 0; c < 20; ++c) pts.col(c) = random_point(4, rng);
  const auto [mean, var] = m.predict_batch(pts);
  for (Eigen::Index c = 0; c < 20; ++c) {
    const auto p = m.predict(pts.col(c));
    EXPECT_NEAR(p.mean, mean[c], 1e-12);
    EXPECT_NEAR(p.variance, var[c], 1e-12);
  }
}

TEST(Posterior, InterpolatesWithSmallNoise) {
  Rng rng(8);
  const auto s = random_dataset(3, 8, rng);
  const GpModel m = GpModel::build(s.data, KernelHyperparams::isotropic(3, 1.0, 0.2, 1e-8));
  for (std::size_t i = 0; i < s.xs.size(); ++i) {
    EXPECT_NEAR(m.predict(s.xs[i]).mean, s.ys[i], 1e-3);
    EXPECT_LT(m.predict(s.xs[i]).variance, 1e-3);
  }
}

TEST(Posterior, PriorModelIsConstant) {
  const GpModel m = GpModel::prior(3, KernelHyperparams::isotropic(3, 2.0, 0.3, 1e-6));
  const auto p = m.predict(Vector::Constant(3, 0.4));
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 2.0);
}

TEST(Posterior, VarianceNonNegativeAndBelowPrior) {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.index(9);
    const auto s = random_dataset(d, 1 + rng.index(40), rng);
    const GpModel m = GpModel::build(s.data, random_hyper(d, rng));
    for (int q = 0; q < 10; ++q) {
      const auto p = m.predict(random_point(d, rng));
      EXPECT_GE(p.variance, 0.0);
      EXPECT_LE(p.variance, m.prior_variance() * (1 + 1e-12));
    }
  }
}

TEST(Posterior, ConstantRewardsStayFinite) {
  Dataset d(2);
  d.add(Vector::Constant(2, 0.1), 3.0);
  d.add(Vector::Constant(2, 0.9), 3.0);
  const GpModel m = GpModel::build(d, KernelHyperparams::isotropic(2, 1.0, 0.3, 1e-6));
  EXPECT_EQ(m.standardization().std, 1.0);
  EXPECT_NEAR(m.predict(Vector::Constant(2, 0.1)).mean, 3.0, 1e-5);
}

TEST(Posterior, RejectsWrongDimension) {
  Rng rng(1);
  const auto s = random_dataset(3, 4, rng);
  const GpModel m = GpModel::build(s.data, KernelHyperparams::isotropic(3, 1.0, 0.3, 1e-6));
  EXPECT_THROW(m.predict(Vector::Zero(2)), InvalidArgument);
}

TEST(Likelihood, MatchesDenseOracle) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.index(9), n = 1 + rng.index(12);
    const auto s = random_dataset(d, n, rng);
    const auto h = random_hyper(d, rng);
    const GpModel m = GpModel::build(s.data, h);
    const double expected = oracle::dense_lml(s.xs, s.ys, h, m.jitter());
    // Tiny noise makes some values huge and the dense inverse loses digits there.
    EXPECT_NEAR(gp::log_marginal_likelihood(s.data, h), expected, 1e-7 + 1e-9 * std::abs(expected));
  }
}

TEST(Likelihood, EmptyDatasetRejected) {
  EXPECT_THROW(gp::log_marginal_likelihood(Dataset(2), KernelHyperparams::isotropic(2, 1, 1, 1e-3)), InvalidArgument);
}

TEST(Fit, StaysInsideBoxAndBeatsBoxCentre) {
  Rng data_rng(4);
  Dataset d(2);
  for (int i = 0; i < 30; ++i) {
    const Vector x = random_point(2, data_rng);
    d.add(x, std::sin(6.0 * x[0]) + 0.1 * x[1]);
  }
  Rng rng(1);
  const GpModel m = gp::fit(d, 10, rng);
  const auto& h = m.hyper();
  for (auto l : h.lengthscales) {
    EXPECT_GE(l, 0.01 * (1 - 1e-12));
    EXPECT_LE(l, 10.0 * (1 + 1e-12));
  }
  EXPECT_GE(h.signal_variance, 0.01 * (1 - 1e-12));
  EXPECT_LE(h.signal_variance, 100.0 * (1 + 1e-12));
  EXPECT_GE(h.noise_variance, 1e-6 * (1 - 1e-12));
  EXPECT_LE(h.noise_variance, 1.0 * (1 + 1e-12));
  const gp::HyperBounds b;
  const KernelHyperparams centre{std::exp(0.5 * (b.log_signal_lo + b.log_signal_hi)),
                                 Vector::Constant(2, std::exp(0.5 * (b.log_lengthscale_lo + b.log_lengthscale_hi))),
                                 std::exp(0.5 * (b.log_noise_lo + b.log_noise_hi))};
  EXPECT_GE(gp::log_marginal_likelihood(d, h), gp::log_marginal_likelihood(d, centre));
  // The first coordinate carries the signal, so it gets the shorter lengthscale.
  EXPECT_LT(h.lengthscales[0], h.lengthscales[1]);
}

TEST(Fit, DeterministicPerSeed) {
  Rng data_rng(9);
  const auto s = random_dataset(3, 20, data_rng);
  Rng a(5), b(5);
  const GpModel ma = gp::fit(s.data, 3, a), mb = gp::fit(s.data, 3, b);
  EXPECT_EQ(ma.hyper().signal_variance, mb.hyper().signal_variance);
  EXPECT_EQ(ma.hyper().lengthscales, mb.hyper().lengthscales);
  EXPECT_EQ(ma.hyper().noise_variance, mb.hyper().noise_variance);
}

TEST(Fit, SubsetAndWarmStartStillValid) {
  Rng data_rng(10);
  const auto s = random_dataset(2, 60, data_rng);
  Rng rng(2);
  gp::FitOptions o;
  o.restarts = 1;
  o.max_points = 20;
  o.warm_start = KernelHyperparams::isotropic(2, 1.0, 0.3, 1e-3);
  const GpModel m = gp::fit(s.data, rng, o);
  EXPECT_EQ(m.size(), 60u);
  EXPECT_NO_THROW(m.hyper().validate(2));
}

TEST(Fit, RejectsEmptyOrZeroRestarts) {
  Rng rng(0);
  EXPECT_THROW(gp::fit(Dataset(2), 3, rng), InvalidArgument);
  Dataset d(1);
  d.add(Vector::Zero(1), 1.0);
  EXPECT_THROW(gp::fit(d, 0, rng), InvalidArgument);
}

TEST(Conditioning, RankOneExtensionMatchesRebuild) {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + rng.index(9);
    const auto s = random_dataset(d, 1 + rng.index(15), rng);
    const auto h = random_hyper(d, rng);
    const GpModel m = GpModel::build(s.data, h);
    const Vector x = random_point(d, rng);
    const GpModel ext = m.with_observation(x, 7.5);
    Dataset d2 = s.data;
    d2.add(x, 7.5);
    const GpModel full = GpModel::build(d2, h, m.standardization());
    for (int q = 0; q < 5; ++q) {
      const Vector z = random_point(d, rng);
      EXPECT_NEAR(ext.predict(z).mean, full.predict(z).mean, 1e-7);
      EXPECT_NEAR(ext.predict(z).variance, full.predict(z).variance, 1e-7);
    }
  }
}

TEST(Conditioning, HallucinationLeavesOriginalUntouched) {
  Rng rng(13);
  const auto s = random_dataset(3, 6, rng);
  const GpModel m = GpModel::build(s.data, KernelHyperparams::isotropic(3, 1.0, 0.3, 1e-6));
  const Vector x = random_point(3, rng);
  const auto before = m.predict(x);
  const GpModel c = gp::condition_on_hallucination(m, x, before.mean);
  EXPECT_EQ(m.size(), 6u);
  EXPECT_EQ(c.size(), 7u);
  EXPECT_EQ(m.predict(x).variance, before.variance);
  EXPECT_LT(c.predict(x).variance, before.variance);
  // Conditioning on the posterior mean leaves the mean in place.
  EXPECT_NEAR(c.predict(x).mean, before.mean, 1e-6);
  EXPECT_THROW(gp::condition_on_hallucination(m, x, std::nan("")), InvalidArgument);
}

TEST(Conditioning, DuplicateInputMergesInsteadOfGrowing) {
  Rng rng(14);
  const auto s = random_dataset(2, 5, rng);
  const GpModel m = GpModel::build(s.data, KernelHyperparams::isotropic(2, 1.0, 0.3, 1e-6));
  const GpModel c = m.with_observation(s.xs[2], s.ys[2] + 4.0);
  EXPECT_EQ(c.size(), 5u);
  EXPECT_DOUBLE_EQ(c.data().rewards()[2], s.ys[2] + 2.0);
}
