#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "vbgp/error.hpp"
#include "vbgp/random.hpp"

namespace vbgp {

/// Leading eigenpairs of a symmetric PSD matrix, eigenvalues nonincreasing,
/// eigenvectors in orthonormal columns.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // source_dim x rank
  Eigen::Index source_dim = 0;

  [[nodiscard]] Eigen::Index rank() const noexcept { return eigenvalues.size(); }
};

namespace detail {

inline void check_symmetric(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ConfigError(std::string(who) + ": expected a nonempty square matrix");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw ConfigError(std::string(who) + ": matrix is not symmetric (defect " +
                      std::to_string(asym) + ")");
  }
}

// Reverse the ascending solver output; clamp tiny negatives to zero.
inline SpectralDecomposition descending(const Eigen::VectorXd& ascending_values,
                                        const Eigen::MatrixXd& ascending_vectors,
                                        Eigen::Index keep, double clamp_tol) {
  const Eigen::Index n = ascending_values.size();
  SpectralDecomposition out;
  out.source_dim = ascending_vectors.rows();
  out.eigenvalues.resize(keep);
  out.eigenvectors.resize(ascending_vectors.rows(), keep);
  for (Eigen::Index j = 0; j < keep; ++j) {
    double v = ascending_values(n - 1 - j);
    if (v < 0.0 && v >= -clamp_tol) v = 0.0;
    out.eigenvalues(j) = v;
    out.eigenvectors.col(j) = ascending_vectors.col(n - 1 - j);
  }
  return out;
}

}  // namespace detail

/// Full symmetric eigendecomposition, eigenvalues sorted in decreasing order.
/// Negative eigenvalues no smaller than -1e-10 * trace are clamped to zero.
inline SpectralDecomposition eig_symmetric(const Eigen::MatrixXd& a) {
  detail::check_symmetric(a, "eig_symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eig_symmetric: eigensolver did not converge");
  }
  const double tol = 1e-10 * std::abs(a.trace());
  return detail::descending(solver.eigenvalues(), solver.eigenvectors(),
                            a.rows(), tol);
}

/// Eigenvalues only, decreasing; same clamping as eig_symmetric.
inline Eigen::VectorXd eigenvalues_symmetric(const Eigen::MatrixXd& a) {
  detail::check_symmetric(a, "eigenvalues_symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eigenvalues_symmetric: eigensolver did not converge");
  }
  const double tol = 1e-10 * std::abs(a.trace());
  Eigen::VectorXd v = solver.eigenvalues().reverse();
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v(j) < 0.0 && v(j) >= -tol) v(j) = 0.0;
  }
  return v;
}

namespace detail {

struct LanczosResult {
  bool converged = false;
  SpectralDecomposition decomposition;
};

// Lanczos with full reorthogonalization on a Krylov space of dimension
// `steps`. Invariant subspaces are escaped by restarting from a fresh random
// vector orthogonal to the basis, which also exposes repeated eigenvalues.
inline LanczosResult lanczos_top(const Eigen::MatrixXd& a, Eigen::Index m,
                                 Eigen::Index steps, double norm_estimate) {
  const Eigen::Index n = a.rows();
  CounterRng rng(0x5eed1a9c20fULL, static_cast<std::uint64_t>(steps),
                 Stream::Lanczos);
  Eigen::MatrixXd basis(n, steps);
  Eigen::VectorXd alpha(steps);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(steps);
  auto fresh = [&](Eigen::Index used) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform() - 0.5;
    for (int pass = 0; pass < 2; ++pass) {
      v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
    }
    return Eigen::VectorXd(v / v.norm());
  };
  basis.col(0) = fresh(0);
  Eigen::VectorXd w(n);
  const double breakdown = 1e-13 * norm_estimate;
  for (Eigen::Index k = 0; k < steps; ++k) {
    w.noalias() = a.selfadjointView<Eigen::Lower>() * basis.col(k);
    alpha(k) = basis.col(k).dot(w);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    }
    if (k + 1 == steps) {
      beta(k) = w.norm();
      break;
    }
    const double b = w.norm();
    if (b <= breakdown) {
      beta(k) = 0.0;
      basis.col(k + 1) = fresh(k + 1);
    } else {
      beta(k) = b;
      basis.col(k + 1) = w / b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  tri.computeFromTridiagonal(alpha, beta.head(steps - 1), Eigen::ComputeEigenvectors);
  if (tri.info() != Eigen::Success) return {};
  // residual of Ritz pair i is |beta_last * s_{last,i}|
  const double last_beta = beta(steps - 1);
  const double tol = 1e-12 * norm_estimate;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = steps - 1 - j;
    if (std::abs(last_beta * tri.eigenvectors()(steps - 1, i)) > tol) {
      return {};
    }
  }
  LanczosResult out;
  out.converged = true;
  Eigen::MatrixXd ritz = basis * tri.eigenvectors().rightCols(m);
  out.decomposition = descending(tri.eigenvalues().tail(m), ritz, m,
                                 1e-10 * std::abs(a.trace()));
  return out;
}

}  // namespace detail

/// The m largest eigenpairs. For m much smaller than n a Lanczos iteration is
/// used and the full decomposition serves as fallback; the result agrees with
/// the leading block of eig_symmetric.
inline SpectralDecomposition top_m(const Eigen::MatrixXd& a, Eigen::Index m) {
  detail::check_symmetric(a, "top_m");
  const Eigen::Index n = a.rows();
  if (m < 1 || m > n) {
    throw ConfigError("top_m: m = " + std::to_string(m) + " outside [1, " +
                      std::to_string(n) + "]");
  }
  if (n >= 200 && 4 * m <= n) {
    const double norm_estimate = std::max(a.diagonal().cwiseAbs().sum(), 1e-300);
    for (Eigen::Index steps = std::min(n, 2 * m + 40); steps < n;
         steps = std::min(n, 2 * steps)) {
      auto res = detail::lanczos_top(a, m, steps, norm_estimate);
      if (res.converged) return std::move(res.decomposition);
      if (steps > n / 2) break;
    }
  }
  SpectralDecomposition full = eig_symmetric(a);
  full.eigenvalues.conservativeResize(m);
  full.eigenvectors.conservativeResize(Eigen::NoChange, m);
  return full;
}

}  // namespace vbgp
