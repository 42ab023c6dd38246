#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "vbgp/error.hpp"
#include "vbgp/kernels.hpp"
#include "vbgp/random.hpp"

namespace vbgp {

/// Nodes and weights approximating integration against an input measure.
/// Weights are positive and sum to one.
struct QuadratureRule {
  Points nodes;
  Eigen::VectorXd weights;
  InputMeasure measure;

  [[nodiscard]] Eigen::Index size() const noexcept { return weights.size(); }

  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
      s += weights(k) * f(nodes.row(k));
    }
    return s;
  }
};

inline constexpr int kLegendreNodes = 512;
inline constexpr int kHermiteNodes = 256;
inline constexpr long kMonteCarloNodes = 200000;

/// Gauss-Legendre rule for the uniform distribution on [0, 1].
inline QuadratureRule gauss_legendre_unit(int count = kLegendreNodes) {
  if (count < 1) throw ConfigError("quadrature: need at least one node");
  QuadratureRule rule{Points(count, 1), Eigen::VectorXd(count),
                      InputMeasure::uniform()};
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < count; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = count * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    // map [-1, 1] to [0, 1]; weights for dx/2
    const double w = 1.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes(i, 0) = 0.5 * (1.0 - z);
    rule.nodes(count - 1 - i, 0) = 0.5 * (1.0 + z);
    rule.weights(i) = w;
    rule.weights(count - 1 - i) = w;
  }
  return rule;
}

/// Gauss-Hermite rule for N(0, variance). Nodes start from the Golub-Welsch
/// eigenvalues and are polished by Newton steps on the orthonormal Hermite
/// recurrence, which also yields weights with full relative accuracy.
inline QuadratureRule gauss_hermite(double variance = 1.0,
                                    int count = kHermiteNodes) {
  if (count < 1) throw ConfigError("quadrature: need at least one node");
  if (!(variance > 0.0)) throw ConfigError("quadrature: variance must be > 0");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd sub(std::max(count - 1, 1));
  for (int k = 1; k < count; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  tri.computeFromTridiagonal(diag, sub.head(count - 1), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd guess = tri.eigenvalues();

  QuadratureRule rule{Points(count, 1), Eigen::VectorXd(count),
                      InputMeasure::gaussian(variance)};
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const double scale = std::sqrt(2.0 * variance);
  for (int i = 0; i < count; ++i) {
    double z = guess(i);
    double pp = 0.0;
    for (int it = 0; it < 20; ++it) {
      // orthonormal Hermite polynomials without the exponential weight
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < count; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * count) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes(i, 0) = scale * z;
    // 2/pp^2 is the weight for e^{-t^2} dt; divide by sqrt(pi) for N(0, 1)
    rule.weights(i) = 2.0 / (pp * pp) / std::sqrt(std::numbers::pi);
  }
  return rule;
}

/// Equal-weight Monte Carlo rule, used for d > 1.
inline QuadratureRule monte_carlo_rule(const InputMeasure& measure, int dim,
                                       long count, std::uint64_t seed) {
  CounterRng rng(seed, 0, Stream::Quadrature);
  QuadratureRule rule{Points(count, dim),
                      Eigen::VectorXd::Constant(count, 1.0 / count), measure};
  for (long k = 0; k < count; ++k) {
    for (int c = 0; c < dim; ++c) {
      rule.nodes(k, c) = measure.kind == InputMeasure::Kind::UniformUnitCube
                             ? rng.uniform()
                             : std::sqrt(measure.variance) * rng.normal();
    }
  }
  return rule;
}

/// Default rule for a measure: 512-node Gauss-Legendre or 256-node
/// Gauss-Hermite in one dimension, Monte Carlo otherwise.
inline QuadratureRule default_rule(const InputMeasure& measure, int dim = 1,
                                   std::uint64_t seed = 0) {
  if (dim > 1) return monte_carlo_rule(measure, dim, kMonteCarloNodes, seed);
  if (measure.kind == InputMeasure::Kind::UniformUnitCube) {
    return gauss_legendre_unit();
  }
  return gauss_hermite(measure.variance);
}

}  // namespace vbgp
