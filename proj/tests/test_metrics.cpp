#include <gtest/gtest.h>

#include <cmath>

#include "vbgp/error.hpp"
#include "vbgp/metrics.hpp"
#include "vbgp/random.hpp"

namespace {

using namespace vbgp;

RegressionFunction random_function(CounterRng& r) {
  const double a = r.normal();
  const double b = r.normal();
  const double c = r.normal();
  return [a, b, c](const Eigen::RowVectorXd& x) {
    return a * std::cos(3.0 * x(0)) + b * x(0) * x(0) + c * std::sin(7.0 * x(0));
  };
}

TEST(Hellinger, IdenticalIsZeroAndSymmetric) {
  const QuadratureRule rule = gauss_legendre_unit();
  CounterRng r(1);
  const auto f = random_function(r);
  const auto g = random_function(r);
  EXPECT_EQ(hellinger(f, f, 0.3, rule), 0.0);
  EXPECT_EQ(hellinger(f, g, 0.3, rule), hellinger(g, f, 0.3, rule));
  EXPECT_LE(hellinger(f, g, 1e-3, rule), 1.0);
}

TEST(Hellinger, ConstantShiftClosedForm) {
  const QuadratureRule rule = gauss_legendre_unit();
  const RegressionFunction zero = [](const Eigen::RowVectorXd&) { return 0.0; };
  for (double c : {0.1, 1.0, 2.5}) {
    for (double sigma : {0.2, 1.0, 3.0}) {
      const RegressionFunction shift = [c](const Eigen::RowVectorXd&) { return c; };
      const double expect = std::sqrt(1.0 - std::exp(-c * c / (8.0 * sigma * sigma)));
      EXPECT_NEAR(hellinger(shift, zero, sigma, rule), expect, 1e-10);
    }
  }
  const RegressionFunction one = [](const Eigen::RowVectorXd&) { return 1.0; };
  EXPECT_NEAR(hellinger(one, zero, 1.0, rule), 0.34278724799095346, 1e-10);
}

TEST(Hellinger, QuadratureAgreesWithMonteCarlo) {
  const QuadratureRule rule = gauss_legendre_unit();
  CounterRng r(2);
  for (int pair = 0; pair < 10; ++pair) {
    const auto f = random_function(r);
    const auto g = random_function(r);
    const double sigma = 0.5;
    const int n = 1000000;
    double s = 0.0;
    double s2 = 0.0;
    CounterRng u(100 + pair);
    Eigen::RowVectorXd x(1);
    for (int i = 0; i < n; ++i) {
      x(0) = u.uniform();
      const double d = f(x) - g(x);
      const double v = -std::expm1(-d * d / (8.0 * sigma * sigma));
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
    const double h = hellinger(f, g, sigma, rule);
    EXPECT_NEAR(h * h, mean, 3.0 * se + 1e-15) << "pair " << pair;
  }
}

TEST(L2Distance, BasicsAndHellingerComparison) {
  const QuadratureRule rule = gauss_legendre_unit();
  const RegressionFunction zero = [](const Eigen::RowVectorXd&) { return 0.0; };
  const RegressionFunction c = [](const Eigen::RowVectorXd&) { return -0.7; };
  EXPECT_NEAR(l2_distance(c, zero, rule), 0.7, 1e-13);
  EXPECT_EQ(l2_distance(c, c, rule), 0.0);
  CounterRng r(3);
  for (int i = 0; i < 20; ++i) {
    const auto f = random_function(r);
    const auto g = random_function(r);
    const double sigma = 0.1 + r.uniform();
    EXPECT_LE(hellinger(f, g, sigma, rule),
              l2_distance(f, g, rule) / (std::sqrt(8.0) * sigma) + 1e-14);
  }
}

TEST(L2Distance, GaussianMeasure) {
  const QuadratureRule rule = gauss_hermite(2.0);
  const RegressionFunction x = [](const Eigen::RowVectorXd& p) { return p(0); };
  const RegressionFunction zero = [](const Eigen::RowVectorXd&) { return 0.0; };
  EXPECT_NEAR(l2_distance(x, zero, rule), std::sqrt(2.0), 1e-12);
}

TEST(SupDistance, Basics) {
  EXPECT_EQ(sup_distance(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, -2, 3)), 4.0);
  EXPECT_THROW(sup_distance(Eigen::Vector3d(1, 2, 3), Eigen::Vector2d(1, 2)), ConfigError);
}

TEST(BandSummary, CoverageAndWidth) {
  const Eigen::Vector3d truth(0.0, 1.0, 2.0);
  CredibleBand exact{truth, truth, 0.95};
  auto s = band_summary(exact, truth);
  EXPECT_EQ(s.coverage, 1.0);
  EXPECT_EQ(s.mean_width, 0.0);
  CredibleBand above{truth.array() + 1.0, truth.array() + 2.0, 0.95};
  s = band_summary(above, truth);
  EXPECT_EQ(s.coverage, 0.0);
  EXPECT_EQ(s.mean_width, 1.0);
  CredibleBand partial{Eigen::Vector3d(-1, 2, 1), Eigen::Vector3d(1, 3, 4), 0.95};
  s = band_summary(partial, truth);
  EXPECT_NEAR(s.coverage, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.mean_width, 2.0, 1e-15);
  EXPECT_THROW(band_summary(partial, Eigen::Vector2d(0, 0)), ConfigError);
}

}  // namespace
