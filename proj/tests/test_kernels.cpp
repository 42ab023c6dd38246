#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "vbgp/error.hpp"
#include "vbgp/kernels.hpp"
#include "vbgp/quadrature.hpp"
#include "vbgp/random.hpp"

namespace {

using namespace vbgp;

Points uniform_points(Eigen::Index n, int dim, std::uint64_t seed) {
  CounterRng r(seed);
  Points p(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < dim; ++c) p(i, c) = r.uniform();
  }
  return p;
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

TEST(Kernels, SquaredExponentialValues) {
  const auto se = KernelSpec::squared_exponential(0.7);
  EXPECT_DOUBLE_EQ(kernel_eval(se, 0.3, 0.3), 1.0);
  EXPECT_NEAR(kernel_eval(se, 0.1, 0.8), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel_eval(se, 0.8, 0.1), std::exp(-1.0), 1e-15);
}

TEST(Kernels, MaternHalfIsExponential) {
  const auto m = KernelSpec::matern(0.5);
  EXPECT_NEAR(kernel_eval(m, 0.0, 1.0), 0.36787944117144233, 1e-13);
  for (double r : {0.01, 0.2, 1.5, 4.0}) {
    EXPECT_NEAR(kernel_eval(m, 0.0, r), std::exp(-r), 1e-13 * std::exp(-r) + 1e-300);
  }
}

TEST(Kernels, MaternOrderPointSixOracle) {
  // (2^{0.4} / Gamma(0.6)) z^{0.6} K_{0.6}(z), z = sqrt(1.2) * 0.3, from the
  // 50-digit Bessel generator
  const auto m = KernelSpec::matern(0.6);
  EXPECT_NEAR(kernel_eval(m, 0.2, 0.5), 0.77907596185655127, 1e-12);
}

TEST(Kernels, MaternUnitDiagonalAndContinuity) {
  for (double alpha : {0.3, 0.6, 1.5, 2.5, 4.7}) {
    const auto m = KernelSpec::matern(alpha, 0.8);
    EXPECT_DOUBLE_EQ(kernel_eval(m, 0.4, 0.4), 1.0);
    EXPECT_NEAR(kernel_eval(m, 0.4, 0.4 + 1e-9), 1.0, 1e-4);
    EXPECT_LE(kernel_eval(m, 0.0, 1e-12), 1.0);
  }
}

TEST(Kernels, MaternMultiDimensionalUsesEuclideanDistance) {
  const auto m2 = KernelSpec::matern(0.6, 1.0, 2);
  const auto m1 = KernelSpec::matern(0.6);
  Eigen::RowVector2d x(0.1, 0.2);
  Eigen::RowVector2d y(0.4, 0.6);
  EXPECT_NEAR(kernel_eval(m2, x, y), kernel_eval(m1, 0.0, 0.5), 1e-15);
}

TEST(Kernels, GramMatrixSymmetricAndPsd) {
  const Points xs = uniform_points(5, 1, 11);
  for (const auto& spec :
       {KernelSpec::squared_exponential(0.5), KernelSpec::matern(0.6),
        KernelSpec::random_series(1.0)}) {
    const Eigen::MatrixXd k = gram_matrix(spec, xs);
    EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(min_eigenvalue(k), -1e-12);
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index j = 0; j < 5; ++j) {
        EXPECT_NEAR(k(i, j), kernel_eval(spec, xs.row(i), xs.row(j)), 1e-12);
      }
    }
  }
}

TEST(Kernels, GramMinimumEigenvalueLargerDesign) {
  const Points xs = uniform_points(300, 1, 5);
  for (const auto& spec : {KernelSpec::squared_exponential(0.3), KernelSpec::matern(0.6)}) {
    const Eigen::MatrixXd k = gram_matrix(spec, xs);
    EXPECT_GE(min_eigenvalue(k), -1e-10 * k.diagonal().mean());
  }
}

TEST(Kernels, SinglePointAndDuplicates) {
  Points one(1, 1);
  one << 0.3;
  const auto se = KernelSpec::squared_exponential(1.0);
  EXPECT_DOUBLE_EQ(gram_matrix(se, one)(0, 0), 1.0);
  Points dup(3, 1);
  dup << 0.2, 0.7, 0.2;
  const Eigen::MatrixXd k = gram_matrix(se, dup);
  EXPECT_EQ(k.row(0), k.row(2));
  EXPECT_NEAR(min_eigenvalue(k), 0.0, 1e-12);
}

TEST(Kernels, CrossCovarianceMatchesGram) {
  const Points xs = uniform_points(7, 1, 9);
  for (const auto& spec : {KernelSpec::matern(1.3), KernelSpec::random_series(1.0, 1, 50)}) {
    EXPECT_LE((cross_covariance(spec, xs, xs) - gram_matrix(spec, xs)).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_LE((kernel_diagonal(spec, xs) - gram_matrix(spec, xs).diagonal())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Kernels, SeriesGramIsMercerTruncation) {
  // direct double loop with explicit cosines
  const auto spec = KernelSpec::random_series(1.0, 1, 40);
  const Points xs = uniform_points(6, 1, 3);
  const Eigen::MatrixXd k = gram_matrix(spec, xs);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index l = 0; l < 6; ++l) {
      double s = 1.0;
      for (int j = 2; j <= 40; ++j) {
        s += std::pow(j, -3.0) * 2.0 * std::cos((j - 1) * std::numbers::pi * xs(i, 0)) *
             std::cos((j - 1) * std::numbers::pi * xs(l, 0));
      }
      EXPECT_NEAR(k(i, l), s, 1e-12);
    }
  }
}

TEST(Kernels, SeriesDiagonalBound) {
  const auto spec = KernelSpec::random_series(1.0);
  const double zeta3 = 1.2020569031595943;
  const Points xs = uniform_points(20, 1, 4);
  EXPECT_LE(kernel_diagonal(spec, xs).maxCoeff(), 2.0 * zeta3);
}

TEST(Kernels, SeriesDefaultTruncationTail) {
  const auto spec = KernelSpec::random_series(1.0);
  const long j = series_truncation(spec);
  // integral bound on the tail relative to zeta(3)
  const double tail_bound = 0.5 * std::pow(static_cast<double>(j), -2.0);
  EXPECT_LT(tail_bound, 1e-8 * 1.2020569031595943);
  EXPECT_LE(j, kMaxDefaultSeriesTerms);
  auto fixed = spec;
  fixed.series_terms = 123;
  EXPECT_EQ(series_truncation(fixed), 123);
}

TEST(Kernels, CosineMultiIndicesGraded) {
  const auto idx = cosine_multi_indices(2, 6);
  ASSERT_EQ(idx.size(), 6U);
  EXPECT_EQ(idx[0], (std::vector<int>{0, 0}));
  EXPECT_EQ(idx[1], (std::vector<int>{1, 0}));
  EXPECT_EQ(idx[2], (std::vector<int>{0, 1}));
  EXPECT_EQ(idx[3], (std::vector<int>{2, 0}));
  EXPECT_EQ(idx[4], (std::vector<int>{1, 1}));
  EXPECT_EQ(idx[5], (std::vector<int>{0, 2}));
}

TEST(Kernels, ValidationErrors) {
  EXPECT_THROW(KernelSpec::matern(0.0).validate(), ConfigError);
  EXPECT_THROW(KernelSpec::matern(0.5, -1.0).validate(), ConfigError);
  auto s = KernelSpec::random_series(1.0);
  s.input_measure = InputMeasure::gaussian(1.0);
  EXPECT_THROW(s.validate(), ConfigError);
  Eigen::RowVector2d p(0.0, 0.0);
  Eigen::Matrix<double, 1, 1> q;
  q << 0.0;
  EXPECT_THROW(kernel_eval(KernelSpec::matern(0.5), p, q), ConfigError);
}

// --- operator eigensystems ------------------------------------------------------

TEST(OperatorEigensystem, SquaredExponentialClosedForm) {
  // a = 1/4 (G = N(0, 1)), b = 1: A = 2, lambda_j = 0.5^j
  const auto e = operator_eigensystem(KernelSpec::squared_exponential(1.0));
  EXPECT_DOUBLE_EQ(e.hermite_a(), 0.25);
  EXPECT_NEAR(e.eigenvalue(1), 0.5, 1e-15);
  EXPECT_NEAR(e.ratio(), 0.5, 1e-15);
  for (long j = 1; j <= 30; ++j) {
    EXPECT_NEAR(e.eigenvalue(j), std::pow(0.5, j), 1e-15 * std::pow(0.5, j));
  }
  EXPECT_NEAR(e.tail_sum(1), 1.0, 1e-14);
  EXPECT_NEAR(e.tail_sum(5), std::pow(0.5, 4), 1e-15);
}

TEST(OperatorEigensystem, SquaredExponentialEigenEquation) {
  for (double b : {1.0, 0.4}) {
    const auto spec = KernelSpec::squared_exponential(b, InputMeasure::gaussian(1.0));
    const auto e = operator_eigensystem(spec);
    const QuadratureRule rule = gauss_hermite(1.0);
    const Eigen::MatrixXd phi = e.features(rule.nodes, 20);
    Points ys(20, 1);
    ys.col(0) = Eigen::VectorXd::LinSpaced(20, -3.0, 3.0);
    const Eigen::MatrixXd kyx = cross_covariance(spec, ys, rule.nodes);
    const Eigen::MatrixXd phi_y = e.features(ys, 20);
    const Eigen::MatrixXd lhs = kyx * rule.weights.asDiagonal() * phi;
    double worst = 0.0;
    for (long j = 0; j < 20; ++j) {
      worst = std::max(worst, (lhs.col(j) - e.eigenvalue(j + 1) * phi_y.col(j))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    EXPECT_LE(worst, 1e-6) << "b = " << b;
    // orthonormal in L2(G)
    const Eigen::MatrixXd gram = phi.transpose() * rule.weights.asDiagonal() * phi;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(OperatorEigensystem, SeriesEigenvaluesAndOrthonormality) {
  const auto e = operator_eigensystem(KernelSpec::random_series(1.0));
  for (long j = 1; j <= 50; ++j) {
    EXPECT_DOUBLE_EQ(e.eigenvalue(j), std::pow(static_cast<double>(j), -3.0));
  }
  for (long j = 2; j <= e.count(); j += 997) {
    EXPECT_LE(e.eigenvalue(j), e.eigenvalue(j - 1));
  }
  const QuadratureRule rule = gauss_legendre_unit();
  const Eigen::MatrixXd phi = e.features(rule.nodes, 30);
  const Eigen::MatrixXd gram = phi.transpose() * rule.weights.asDiagonal() * phi;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(e.sup_norm_bound(), std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(e.tail_sum(6), 0.016394866122557248, 1e-8);
}

TEST(OperatorEigensystem, SeriesEigenEquation) {
  const auto spec = KernelSpec::random_series(1.0, 1, 40);
  const auto e = operator_eigensystem(spec);
  const QuadratureRule rule = gauss_legendre_unit();
  Points ys(5, 1);
  ys << 0.05, 0.3, 0.5, 0.77, 0.99;
  const Eigen::MatrixXd lhs = cross_covariance(spec, ys, rule.nodes) *
                              rule.weights.asDiagonal() * e.features(rule.nodes, 10);
  const Eigen::MatrixXd phi_y = e.features(ys, 10);
  for (long j = 0; j < 10; ++j) {
    EXPECT_LE((lhs.col(j) - e.eigenvalue(j + 1) * phi_y.col(j)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(OperatorEigensystem, UnsupportedCombinations) {
  EXPECT_THROW(operator_eigensystem(KernelSpec::matern(0.6)), UnsupportedError);
  auto se = KernelSpec::squared_exponential(1.0);
  se.input_measure = InputMeasure::uniform();
  EXPECT_THROW(operator_eigensystem(se), UnsupportedError);
  EXPECT_THROW(operator_eigensystem(KernelSpec::squared_exponential(
                   1.0, InputMeasure::gaussian(1.0), 2)),
               UnsupportedError);
}

}  // namespace
