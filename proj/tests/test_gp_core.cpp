#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>

#include "vbgp/error.hpp"
#include "vbgp/gp_core.hpp"
#include "vbgp/random.hpp"

namespace {

using namespace vbgp;

Dataset random_data(Eigen::Index n, double sigma, std::uint64_t seed) {
  CounterRng r(seed);
  Dataset d;
  d.xs.resize(n, 1);
  d.ys.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.xs(i, 0) = r.uniform();
    d.ys(i) = std::sin(6.0 * d.xs(i, 0)) + sigma * r.normal();
  }
  d.noise_sd = sigma;
  return d;
}

Points line(Eigen::Index n, double lo, double hi) {
  Points g(n, 1);
  g.col(0) = Eigen::VectorXd::LinSpaced(n, lo, hi);
  return g;
}

TEST(ExactPosterior, SinglePoint) {
  Dataset d;
  d.xs = Points::Constant(1, 1, 0.3);
  d.ys = Eigen::VectorXd::Constant(1, 2.0);
  d.noise_sd = 0.5;
  const auto spec = KernelSpec::squared_exponential(1.0);
  const auto p = exact_posterior(d, spec, d.xs);
  EXPECT_NEAR(p.mean(0), 1.0 / (0.25 + 1.0) * 2.0, 1e-14);
  EXPECT_NEAR(p.variance(0), 1.0 - 1.0 / 1.25, 1e-14);
  EXPECT_EQ(p.provenance, Provenance::Exact);
}

TEST(ExactPosterior, DenseSolveOracle) {
  const Dataset d = random_data(6, 0.3, 5);
  const auto spec = KernelSpec::squared_exponential(0.5);
  const Points grid = line(9, -0.2, 1.2);
  const auto p = exact_posterior(d, spec, grid);
  Eigen::MatrixXd kn(6, 6);
  Eigen::MatrixXd kxf(9, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double r = d.xs(i, 0) - d.xs(j, 0);
      kn(i, j) = std::exp(-r * r / 0.25) + (i == j ? 0.09 : 0.0);
    }
    for (int g = 0; g < 9; ++g) {
      const double r = grid(g, 0) - d.xs(i, 0);
      kxf(g, i) = std::exp(-r * r / 0.25);
    }
  }
  const Eigen::MatrixXd inv = kn.fullPivLu().inverse();
  const Eigen::VectorXd mean = kxf * inv * d.ys;
  Eigen::MatrixXd kxx(9, 9);
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      const double r = grid(a, 0) - grid(b, 0);
      kxx(a, b) = std::exp(-r * r / 0.25);
    }
  }
  const Eigen::MatrixXd cov = kxx - kxf * inv * kxf.transpose();
  EXPECT_LE((p.mean - mean).cwiseAbs().maxCoeff(), 1e-10);
  ASSERT_TRUE(p.covariance.has_value());
  EXPECT_LE((*p.covariance - cov).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((p.variance - cov.diagonal()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExactPosterior, HugeNoiseRecoversPrior) {
  Dataset d = random_data(20, 1e6, 3);
  const auto spec = KernelSpec::matern(0.6);
  const auto p = exact_posterior(d, spec, line(15, 0.0, 1.0), false);
  EXPECT_LE(p.mean.cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LE((p.variance.array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(ExactPosterior, VarianceBelowPrior) {
  const Dataset d = random_data(40, 0.2, 8);
  for (const auto& spec : {KernelSpec::matern(0.6), KernelSpec::squared_exponential(0.2)}) {
    const Points g = line(50, 0.0, 1.0);
    const auto p = exact_posterior(d, spec, g);
    EXPECT_LE((p.variance - kernel_diagonal(spec, g)).maxCoeff(), 1e-10);
    EXPECT_GE(p.variance.minCoeff(), 0.0);
    EXPECT_EQ((*p.covariance - p.covariance->transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(ExactPosterior, Interpolation) {
  const Dataset d = random_data(15, 1e-4, 12);
  const auto p = exact_posterior(d, KernelSpec::matern(1.5, 0.3), d.xs, false);
  EXPECT_LE((p.mean - d.ys).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(ExactPosterior, InvalidData) {
  Dataset d = random_data(4, 0.1, 1);
  d.ys.resize(3);
  EXPECT_THROW(exact_posterior(d, KernelSpec::matern(0.5), line(2, 0, 1)), ConfigError);
  d = random_data(4, 0.1, 1);
  d.noise_sd = 0.0;
  EXPECT_THROW(exact_posterior(d, KernelSpec::matern(0.5), line(2, 0, 1)), ConfigError);
}

TEST(JitteredCholesky, PlainThenJitterThenFail) {
  const Eigen::Matrix2d pd{{2.0, 0.5}, {0.5, 1.0}};
  JitteredCholesky c(pd);
  EXPECT_EQ(c.jitter(), 0.0);
  EXPECT_NEAR(c.log_determinant(), std::log(1.75), 1e-14);
  const Eigen::Matrix2d singular{{1.0, 1.0}, {1.0, 1.0}};
  JitteredCholesky s(singular);
  EXPECT_GT(s.jitter(), 0.0);
  EXPECT_LE(s.jitter(), 1e-6);
  const Eigen::Matrix2d indefinite{{1.0, 2.0}, {2.0, 1.0}};
  EXPECT_THROW(JitteredCholesky{indefinite}, FactorizationError);
}

TEST(CredibleBand, QuantilesAndNesting) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-9);
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489004, 1e-12);
  GaussianPredictive p;
  p.grid = line(3, 0, 1);
  p.mean = Eigen::Vector3d(0.0, 1.0, -2.0);
  p.variance = Eigen::Vector3d(1.0, 0.0, 4.0);
  const auto b95 = credible_band(p, 0.95);
  const auto b99 = credible_band(p, 0.99);
  EXPECT_NEAR(b95.upper(0) - p.mean(0), 1.959964, 1e-6);
  EXPECT_EQ(b95.lower(1), 1.0);
  EXPECT_EQ(b95.upper(1), 1.0);
  EXPECT_TRUE((b99.lower.array() <= b95.lower.array()).all());
  EXPECT_TRUE((b99.upper.array() >= b95.upper.array()).all());
  EXPECT_THROW(credible_band(p, 1.0), DomainError);
  EXPECT_THROW(normal_quantile(0.0), DomainError);
}

}  // namespace
