#pragma once

// Inducing-variable variational posteriors built from spectral information,
// and the exact KL divergence between the optimal member and the posterior.
//
// Both constructions give a diagonal K_uu and a low-rank Nystrom matrix
// Q_ff = K_fu K_uu^{-1} K_uf = F F^T with F = K_fu L_uu^{-T}; every solve
// with sigma^2 I + Q_ff goes through the m x m "whitened" system
// B = I + sigma^{-2} F^T F.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "vbgp/error.hpp"
#include "vbgp/gp_core.hpp"
#include "vbgp/kernels.hpp"
#include "vbgp/spectral.hpp"

namespace vbgp {

enum class InducingMethod {
  /// u_j = v_j^T f, v_j eigenvectors of K_ff.
  MatrixEig,
  /// u_j = <f, phi_j>_{L^2(G)}, phi_j eigenfunctions of T_k.
  OperatorEig,
};

inline std::string to_string(InducingMethod m) {
  return m == InducingMethod::MatrixEig ? "MatrixEig" : "OperatorEig";
}

/// Q_ff is materialized up to this many training points and kept in factored
/// form beyond.
inline constexpr Eigen::Index kMaterializeLimit = 2000;

/// Relative floor on the smallest retained inducing variance.
inline constexpr double kInducingConditioning = 1e-14;

struct InducingSet {
  InducingMethod method = InducingMethod::MatrixEig;
  Eigen::Index m = 0;
  Eigen::MatrixXd k_uu;
  Eigen::MatrixXd k_fu;
  /// n x m factor with Q_ff = factor * factor^T.
  Eigen::MatrixXd factor;
  std::optional<Eigen::MatrixXd> q_ff_dense;
  /// Gram matrix K_ff of the training inputs (needed for the KL).
  std::shared_ptr<const Eigen::MatrixXd> k_ff;
  /// Training inputs; used for off-training covariances of method 1.
  Points xs;
  /// Method 1: the m leading eigenvectors v_j (n x m).
  Eigen::MatrixXd eigenvectors;
  /// Method 2: the operator eigensystem.
  std::shared_ptr<const OperatorEigensystem> eigensystem;

  [[nodiscard]] Eigen::Index n() const noexcept { return factor.rows(); }

  /// Q_ff as a dense matrix.
  [[nodiscard]] Eigen::MatrixXd q_ff() const {
    if (q_ff_dense) return *q_ff_dense;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n(), n());
    q.selfadjointView<Eigen::Lower>().rankUpdate(factor);
    q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
    return q;
  }

  /// tr(K_ff - Q_ff).
  [[nodiscard]] double residual_trace() const {
    if (!k_ff) throw ConfigError("inducing set: K_ff not attached");
    return k_ff->trace() - factor.squaredNorm();
  }
};

struct VariationalParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

namespace detail {

inline void finish_inducing(InducingSet& ind) {
  if (ind.factor.rows() <= kMaterializeLimit) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ind.factor.rows(), ind.factor.rows());
    q.selfadjointView<Eigen::Lower>().rankUpdate(ind.factor);
    q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
    ind.q_ff_dense = std::move(q);
  }
}

inline Eigen::Index max_usable(const Eigen::VectorXd& variances) {
  Eigen::Index k = 0;
  while (k < variances.size() &&
         variances(k) > kInducingConditioning * variances(0)) {
    ++k;
  }
  return k;
}

}  // namespace detail

/// Inducing variables from the m leading eigenpairs (mu_j, v_j) of K_ff:
/// K_uu = diag(mu), K_fu = V diag(mu), Q_ff = sum_{j<=m} mu_j v_j v_j^T.
inline InducingSet inducing_method1(std::shared_ptr<const Eigen::MatrixXd> k_ff,
                                    Eigen::Index m, const Points& xs = Points()) {
  if (!k_ff) throw ConfigError("inducing_method1: null K_ff");
  const Eigen::Index n = k_ff->rows();
  if (m < 1 || m > n) {
    throw ConfigError("inducing_method1: m = " + std::to_string(m) +
                      " outside [1, " + std::to_string(n) + "]");
  }
  if (xs.size() != 0 && xs.rows() != n) {
    throw ConfigError("inducing_method1: inputs do not match K_ff");
  }
  SpectralDecomposition eig = top_m(*k_ff, m);
  const Eigen::VectorXd& mu = eig.eigenvalues;
  if (!(mu(0) > 0.0) || mu(m - 1) < kInducingConditioning * mu(0)) {
    throw ConditioningError(
        "inducing_method1: eigenvalue mu_" + std::to_string(m) +
            " is below 1e-14 * mu_1; K_uu is numerically singular",
        detail::max_usable(mu));
  }
  InducingSet ind;
  ind.method = InducingMethod::MatrixEig;
  ind.m = m;
  ind.k_uu = mu.asDiagonal();
  ind.k_fu = eig.eigenvectors * mu.asDiagonal();
  ind.factor = eig.eigenvectors * mu.cwiseSqrt().asDiagonal();
  ind.eigenvectors = std::move(eig.eigenvectors);
  ind.k_ff = std::move(k_ff);
  ind.xs = xs;
  detail::finish_inducing(ind);
  return ind;
}

inline InducingSet inducing_method1(const Eigen::MatrixXd& k_ff, Eigen::Index m,
                                    const Points& xs = Points()) {
  return inducing_method1(std::make_shared<const Eigen::MatrixXd>(k_ff), m, xs);
}

/// Inducing variables from the m leading operator eigenpairs (lambda_j,
/// phi_j): K_uu = diag(lambda), (K_fu)_ij = lambda_j phi_j(x_i).
inline InducingSet inducing_method2(
    std::shared_ptr<const OperatorEigensystem> eigsys, const Points& xs,
    Eigen::Index m, std::shared_ptr<const Eigen::MatrixXd> k_ff = nullptr) {
  if (!eigsys) throw ConfigError("inducing_method2: null eigensystem");
  if (m < 1 || m > eigsys->count()) {
    throw ConfigError("inducing_method2: m = " + std::to_string(m) +
                      " outside [1, " + std::to_string(eigsys->count()) + "]");
  }
  if (k_ff && k_ff->rows() != xs.rows()) {
    throw ConfigError("inducing_method2: K_ff does not match inputs");
  }
  const Eigen::Map<const Eigen::VectorXd> all(eigsys->eigenvalues().data(),
                                              eigsys->count());
  const Eigen::VectorXd lambda = all.head(m);
  if (lambda(m - 1) <= kInducingConditioning * lambda(0)) {
    throw ConditioningError(
        "inducing_method2: lambda_" + std::to_string(m) + "/lambda_1 <= 1e-14",
        detail::max_usable(all));
  }
  const Eigen::MatrixXd phi = eigsys->features(xs, m);
  InducingSet ind;
  ind.method = InducingMethod::OperatorEig;
  ind.m = m;
  ind.k_uu = lambda.asDiagonal();
  ind.k_fu = phi * lambda.asDiagonal();
  ind.factor = phi * lambda.cwiseSqrt().asDiagonal();
  ind.k_ff = std::move(k_ff);
  ind.xs = xs;
  ind.eigensystem = std::move(eigsys);
  detail::finish_inducing(ind);
  return ind;
}

inline InducingSet inducing_method2(const OperatorEigensystem& eigsys,
                                    const Points& xs, Eigen::Index m,
                                    std::shared_ptr<const Eigen::MatrixXd> k_ff = nullptr) {
  return inducing_method2(std::make_shared<const OperatorEigensystem>(eigsys),
                          xs, m, std::move(k_ff));
}

namespace detail {

// Pieces shared by the optimal parameters: L_uu, A = L_uu^{-1} K_uf = F^T,
// and the Cholesky factor of B = I + sigma^{-2} A A^T.
struct Whitened {
  JitteredCholesky l_uu;
  Eigen::MatrixXd a;
  JitteredCholesky b;
};

inline Whitened whiten(const InducingSet& ind, double s2) {
  Whitened w;
  w.l_uu.compute(ind.k_uu);
  w.a = w.l_uu.solve_lower(ind.k_fu.transpose());
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(ind.m, ind.m);
  b.selfadjointView<Eigen::Lower>().rankUpdate(w.a, 1.0 / s2);
  b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
  w.b.compute(b);
  return w;
}

}  // namespace detail

/// KL-optimal variational parameters of the inducing family:
///   Sigma' = K_uu (K_uu + s^-2 K_uf K_fu)^{-1} K_uu
///   mu'    = s^-2 K_uu (K_uu + s^-2 K_uf K_fu)^{-1} K_uf y
inline VariationalParams optimal_variational_params(const InducingSet& ind,
                                                    const Dataset& data) {
  data.validate();
  if (ind.n() != data.size()) {
    throw ConfigError("optimal_variational_params: inducing set built for " +
                      std::to_string(ind.n()) + " points, data has " +
                      std::to_string(data.size()));
  }
  const double s2 = data.noise_sd * data.noise_sd;
  const auto w = detail::whiten(ind, s2);
  const Eigen::MatrixXd l = w.l_uu.matrix_l();
  VariationalParams p;
  p.mean = l * w.b.solve(w.a * data.ys) / s2;
  Eigen::MatrixXd half = w.b.solve_lower(l.transpose());  // L_B^{-1} L_uu^T
  p.covariance = half.transpose() * half;
  return p;
}

/// Cross-covariances cov(f(x), u_j) for each grid row.
inline Eigen::MatrixXd inducing_cross_covariance(const InducingSet& ind,
                                                 const KernelSpec& spec,
                                                 const Points& grid) {
  if (ind.method == InducingMethod::MatrixEig) {
    if (ind.xs.rows() != ind.n()) {
      throw ConfigError(
          "variational_predictive: method 1 needs the training inputs");
    }
    // cov(f(x), v_j^T f) = sum_i v_j^i k(x, x_i)
    return cross_covariance(spec, grid, ind.xs) * ind.eigenvectors;
  }
  const Eigen::Map<const Eigen::VectorXd> lambda(ind.eigensystem->eigenvalues().data(),
                                                 ind.m);
  return ind.eigensystem->features(grid, ind.m) * lambda.asDiagonal();
}

/// Member of the variational family with parameters (mu, Sigma) on `grid`:
///   mean(x)   = K_xu K_uu^{-1} mu
///   cov(x, y) = k(x, y) - K_xu K_uu^{-1} (K_uu - Sigma) K_uu^{-1} K_uy
inline GaussianPredictive variational_predictive(const InducingSet& ind,
                                                 const VariationalParams& params,
                                                 const KernelSpec& spec,
                                                 const Points& grid,
                                                 bool full_covariance = true) {
  if (grid.rows() == 0) throw ConfigError("variational_predictive: empty grid");
  if (params.mean.size() != ind.m || params.covariance.rows() != ind.m ||
      params.covariance.cols() != ind.m) {
    throw ConfigError("variational_predictive: parameter size mismatch");
  }
  const JitteredCholesky l_uu(ind.k_uu);
  const Eigen::MatrixXd k_xu = inducing_cross_covariance(ind, spec, grid);
  // W = K_xu L_uu^{-T}; S = L_uu^{-1} Sigma L_uu^{-T}
  const Eigen::MatrixXd w = l_uu.solve_lower(k_xu.transpose()).transpose();
  const Eigen::MatrixXd s_half = l_uu.solve_lower(params.covariance);
  const Eigen::MatrixXd s = l_uu.solve_lower(s_half.transpose()).transpose();
  const Eigen::MatrixXd reduction =
      Eigen::MatrixXd::Identity(ind.m, ind.m) - 0.5 * (s + s.transpose());

  GaussianPredictive out;
  out.grid = grid;
  out.provenance = Provenance::Variational;
  out.mean = w * l_uu.solve_lower(params.mean);
  const Eigen::MatrixXd wr = w * reduction;
  out.variance = kernel_diagonal(spec, grid) -
                 (wr.array() * w.array()).rowwise().sum().matrix();
  if (full_covariance) {
    Eigen::MatrixXd cov = cross_covariance(spec, grid, grid);
    cov.noalias() -= wr * w.transpose();
    out.covariance = 0.5 * (cov + cov.transpose());
  }
  clamp_variances(out.variance);
  return out;
}

/// The three parts of 2 KL: y^T(Q_n^{-1} - K_n^{-1})y, log|Q_n|/|K_n| and
/// s^-2 tr(K_n - Q_n).
struct KlTerms {
  double quadratic = 0.0;
  double log_det_ratio = 0.0;
  double trace = 0.0;

  [[nodiscard]] double raw() const noexcept {
    return 0.5 * (quadratic + log_det_ratio + trace);
  }
};

inline KlTerms kl_terms(const InducingSet& ind, const Dataset& data) {
  data.validate();
  if (!ind.k_ff) throw ConfigError("kl: inducing set has no K_ff attached");
  if (ind.n() != data.size()) {
    throw ConfigError("kl: inducing set does not match data");
  }
  const Eigen::Index n = data.size();
  const double s2 = data.noise_sd * data.noise_sd;

  Eigen::MatrixXd kn = *ind.k_ff;
  kn.diagonal().array() += s2;
  const JitteredCholesky chol_k(kn);
  kn.resize(0, 0);
  const Eigen::VectorXd wy = chol_k.solve_lower(data.ys);

  // Q_n = s2 I + F F^T via the m x m matrix B = I + F^T F / s2
  const Eigen::MatrixXd& f = ind.factor;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(ind.m, ind.m);
  b.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose(), 1.0 / s2);
  b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
  const JitteredCholesky chol_b(b);
  const Eigen::VectorXd fty = f.transpose() * data.ys;
  const Eigen::VectorXd wfty = chol_b.solve_lower(fty);
  const double y_q_y = (data.ys.squaredNorm() - wfty.squaredNorm() / s2) / s2;
  const double log_q = static_cast<double>(n) * std::log(s2) + chol_b.log_determinant();

  KlTerms t;
  t.quadratic = y_q_y - wy.squaredNorm();
  t.log_det_ratio = log_q - chol_k.log_determinant();
  t.trace = (ind.k_ff->trace() - f.squaredNorm()) / s2;
  return t;
}

/// KL(Psi || Pi) between the optimal variational posterior and the exact
/// posterior. Rounding noise below zero (1e-8 relative to the size of the
/// terms) is clamped; anything more negative is a NumericalError.
inline double kl_variational_to_posterior(const InducingSet& ind,
                                          const Dataset& data) {
  const KlTerms t = kl_terms(ind, data);
  const double value = t.raw();
  if (value >= 0.0) return value;
  const double scale = std::max(
      1.0, std::abs(t.quadratic) + std::abs(t.log_det_ratio) + std::abs(t.trace));
  if (value >= -1e-8 * scale) return 0.0;
  throw NumericalError("kl: negative divergence " + std::to_string(value));
}

}  // namespace vbgp
