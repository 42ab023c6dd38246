#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vbgp/error.hpp"
#include "vbgp/kernels.hpp"

namespace vbgp {

/// A regression function f : R^d -> R evaluated at one point (a row).
using RegressionFunction = std::function<double(const Eigen::RowVectorXd&)>;

struct Dataset {
  Points xs;
  Eigen::VectorXd ys;
  double noise_sd = 1.0;
  /// Generating truth, simulation only.
  RegressionFunction truth;

  [[nodiscard]] Eigen::Index size() const noexcept { return ys.size(); }

  void validate() const {
    if (xs.rows() != ys.size()) {
      throw ConfigError("dataset: " + std::to_string(xs.rows()) +
                        " inputs but " + std::to_string(ys.size()) +
                        " responses");
    }
    if (ys.size() == 0) throw ConfigError("dataset: empty");
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) {
      throw ConfigError("dataset: noise_sd must be positive");
    }
  }
};

enum class Provenance { Exact, Variational };

/// Gaussian process law restricted to a query grid.
struct GaussianPredictive {
  Points grid;
  Eigen::VectorXd mean;
  /// Marginal variances, clamped at zero.
  Eigen::VectorXd variance;
  /// Full covariance over the grid when requested.
  std::optional<Eigen::MatrixXd> covariance;
  Provenance provenance = Provenance::Exact;
};

/// Marginal variances are clamped at zero from below (rounding only).
inline void clamp_variances(Eigen::VectorXd& v) { v = v.cwiseMax(0.0); }

// --- Cholesky with jitter ----------------------------------------------------

/// Cholesky factor of a symmetric PD matrix. A plain factorization is tried
/// first; on failure tau * mean(diag) is added with tau = 1e-10, 1e-9, ...,
/// 1e-6, and FactorizationError is thrown beyond that.
class JitteredCholesky {
 public:
  JitteredCholesky() = default;

  explicit JitteredCholesky(const Eigen::MatrixXd& a) { compute(a); }

  void compute(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ConfigError("cholesky: matrix not square");
    const Eigen::Index n = a.rows();
    const double mean_diag = n > 0 ? a.diagonal().mean() : 0.0;
    llt_.compute(a);
    jitter_ = 0.0;
    if (llt_.info() == Eigen::Success && finite_diag()) return;
    for (double tau = 1e-10; tau <= 1e-6 * 1.0000001; tau *= 10.0) {
      jitter_ = tau * mean_diag;
      Eigen::MatrixXd shifted = a;
      shifted.diagonal().array() += jitter_;
      llt_.compute(shifted);
      if (llt_.info() == Eigen::Success && finite_diag()) return;
    }
    throw FactorizationError("cholesky: matrix of size " + std::to_string(n) +
                             " not positive definite after jitter 1e-6");
  }

  [[nodiscard]] double jitter() const noexcept { return jitter_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return llt_.rows(); }

  /// log|A| (of the jittered matrix).
  [[nodiscard]] double log_determinant() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  template <typename Rhs>
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.solve(b);
  }

  /// L^{-1} b
  template <typename Rhs>
  [[nodiscard]] Eigen::MatrixXd solve_lower(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.matrixL().solve(b);
  }

  /// L^{-T} b
  template <typename Rhs>
  [[nodiscard]] Eigen::MatrixXd solve_upper(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.matrixU().solve(b);
  }

  [[nodiscard]] Eigen::MatrixXd matrix_l() const { return llt_.matrixL(); }

 private:
  [[nodiscard]] bool finite_diag() const {
    const auto d = llt_.matrixLLT().diagonal();
    return d.allFinite() && (d.array() > 0.0).all();
  }

  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

// --- exact posterior ---------------------------------------------------------

/// Exact GP posterior on `grid`:
///   mean(x)   = K_xf (s^2 I + K_ff)^{-1} y
///   cov(x, y) = k(x, y) - K_xf (s^2 I + K_ff)^{-1} K_fy
/// `gram` may pass a precomputed K_ff.
inline GaussianPredictive exact_posterior(const Dataset& data,
                                          const KernelSpec& spec,
                                          const Points& grid,
                                          bool full_covariance = true,
                                          const Eigen::MatrixXd* gram = nullptr) {
  data.validate();
  if (grid.rows() == 0) throw ConfigError("exact_posterior: empty grid");
  const double s2 = data.noise_sd * data.noise_sd;
  Eigen::MatrixXd kn = gram != nullptr ? *gram : gram_matrix(spec, data.xs);
  kn.diagonal().array() += s2;
  const JitteredCholesky chol(kn);
  const Eigen::MatrixXd kfx = cross_covariance(spec, data.xs, grid);
  const Eigen::MatrixXd half = chol.solve_lower(kfx);  // L^{-1} K_fx
  const Eigen::VectorXd white_y = chol.solve_lower(data.ys);

  GaussianPredictive out;
  out.grid = grid;
  out.provenance = Provenance::Exact;
  out.mean = half.transpose() * white_y;
  out.variance =
      kernel_diagonal(spec, grid) - half.colwise().squaredNorm().transpose();
  if (full_covariance) {
    Eigen::MatrixXd cov = cross_covariance(spec, grid, grid);
    cov.noalias() -= half.transpose() * half;
    out.covariance = 0.5 * (cov + cov.transpose());
  }
  clamp_variances(out.variance);
  return out;
}

// --- credible bands ----------------------------------------------------------

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Halley step against erfc, good to ~1e-15 relative.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0, 1)");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

struct CredibleBand {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.95;

  [[nodiscard]] Eigen::Index size() const noexcept { return lower.size(); }
};

/// Pointwise intervals mean +- z_{(1+level)/2} sqrt(variance).
inline CredibleBand credible_band(const GaussianPredictive& pred,
                                  double level = 0.95) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("credible_band: level must lie in (0, 1)");
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  const Eigen::VectorXd half = z * pred.variance.cwiseMax(0.0).cwiseSqrt();
  return {pred.mean - half, pred.mean + half, level};
}

}  // namespace vbgp
