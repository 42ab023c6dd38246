#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "vbgp/bessel.hpp"
#include "vbgp/error.hpp"

namespace vbgp {

/// Design points, one per row (n x d).
using Points = Eigen::MatrixXd;

enum class KernelKind { Matern, SquaredExponential, RandomSeries };

enum class SeriesBasis { Cosine };

/// Distribution G of the design points.
struct InputMeasure {
  enum class Kind { UniformUnitCube, CenteredGaussian };

  Kind kind = Kind::UniformUnitCube;
  double variance = 1.0;  // CenteredGaussian only

  static InputMeasure uniform() { return {Kind::UniformUnitCube, 1.0}; }
  static InputMeasure gaussian(double variance) {
    return {Kind::CenteredGaussian, variance};
  }

  bool operator==(const InputMeasure&) const = default;
};

struct KernelSpec {
  KernelKind kind = KernelKind::Matern;
  /// Matern order, SE smoothness label, or series decay exponent.
  double alpha = 0.5;
  /// l for Matern, b for the squared exponential.
  double length_scale = 1.0;
  int dim = 1;
  /// Series truncation J; 0 selects the default from the tail rule.
  long series_terms = 0;
  SeriesBasis basis = SeriesBasis::Cosine;
  InputMeasure input_measure = InputMeasure::uniform();

  static KernelSpec matern(double alpha, double length_scale = 1.0,
                           int dim = 1) {
    KernelSpec s;
    s.kind = KernelKind::Matern;
    s.alpha = alpha;
    s.length_scale = length_scale;
    s.dim = dim;
    return s;
  }

  static KernelSpec squared_exponential(
      double length_scale, InputMeasure measure = InputMeasure::gaussian(1.0),
      int dim = 1) {
    KernelSpec s;
    s.kind = KernelKind::SquaredExponential;
    s.length_scale = length_scale;
    s.dim = dim;
    s.input_measure = measure;
    return s;
  }

  static KernelSpec random_series(double alpha, int dim = 1,
                                  long series_terms = 0) {
    KernelSpec s;
    s.kind = KernelKind::RandomSeries;
    s.alpha = alpha;
    s.dim = dim;
    s.series_terms = series_terms;
    return s;
  }

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("kernel: alpha must be positive");
    }
    if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
      throw ConfigError("kernel: length_scale must be positive");
    }
    if (dim < 1) throw ConfigError("kernel: dim must be >= 1");
    if (series_terms < 0) throw ConfigError("kernel: J must be >= 0");
    if (input_measure.kind == InputMeasure::Kind::CenteredGaussian &&
        !(input_measure.variance > 0.0)) {
      throw ConfigError("kernel: Gaussian input variance must be positive");
    }
    if (kind == KernelKind::RandomSeries &&
        input_measure.kind != InputMeasure::Kind::UniformUnitCube) {
      throw ConfigError("kernel: the cosine series lives on the unit cube");
    }
  }

  bool operator==(const KernelSpec&) const = default;
};

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Matern:
      return "Matern";
    case KernelKind::SquaredExponential:
      return "SquaredExponential";
    case KernelKind::RandomSeries:
      return "RandomSeries";
  }
  return "?";
}

/// Decay exponent s of the series eigenvalues lambda_j = j^{-s}.
inline double series_exponent(const KernelSpec& spec) {
  return 1.0 + 2.0 * spec.alpha / spec.dim;
}

inline constexpr long kMaxDefaultSeriesTerms = 100000;

/// Truncation J. The default is the smallest J whose integral tail bound
/// sum_{j>J} j^{-s} <= J^{1-s}/(s-1) is below 1e-8 of the total mass,
/// capped at kMaxDefaultSeriesTerms.
inline long series_truncation(const KernelSpec& spec) {
  if (spec.series_terms > 0) return spec.series_terms;
  const double s = series_exponent(spec);
  const double j = std::ceil(std::pow(1e-8 * (s - 1.0), -1.0 / (s - 1.0)));
  if (!std::isfinite(j) || j > static_cast<double>(kMaxDefaultSeriesTerms)) {
    return kMaxDefaultSeriesTerms;
  }
  return std::max(1L, static_cast<long>(j));
}

// --- cosine basis ------------------------------------------------------------

/// Multi-indices of the tensorized cosine basis in the order used for the
/// series eigenvalues: by total frequency, then larger leading frequencies
/// first.
/// Row j-1 holds the frequencies of phi_j.
inline std::vector<std::vector<int>> cosine_multi_indices(int dim, long count) {
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(count));
  if (dim == 1) {
    for (long k = 0; k < count; ++k) out.push_back({static_cast<int>(k)});
    return out;
  }
  for (int total = 0; static_cast<long>(out.size()) < count; ++total) {
    // enumerate compositions of `total` into dim nonnegative parts
    std::vector<int> c(static_cast<std::size_t>(dim), 0);
    c[0] = total;
    while (true) {
      out.push_back(c);
      if (static_cast<long>(out.size()) == count) return out;
      // next composition in reverse-lex order of c[0]
      int i = dim - 2;
      while (i >= 0 && c[static_cast<std::size_t>(i)] == 0) --i;
      if (i < 0) break;
      --c[static_cast<std::size_t>(i)];
      const int rest = c[static_cast<std::size_t>(dim - 1)] + 1;
      c[static_cast<std::size_t>(dim - 1)] = 0;
      c[static_cast<std::size_t>(i + 1)] = rest;
    }
  }
  return out;
}

/// One-dimensional cosine basis: phi_1 = 1, phi_{k+1}(x) = sqrt(2) cos(k pi x).
inline double cosine_basis_1d(int frequency, double x) {
  if (frequency == 0) return 1.0;
  return std::numbers::sqrt2 * std::cos(frequency * std::numbers::pi * x);
}

/// Feature matrix [phi_j(x_i)] of the first `count` cosine basis functions.
inline Eigen::MatrixXd cosine_features(const Points& xs, long count) {
  const Eigen::Index n = xs.rows();
  const int d = static_cast<int>(xs.cols());
  Eigen::MatrixXd phi(n, count);
  if (d == 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = xs(i, 0);
      for (long k = 0; k < count; ++k) phi(i, k) = cosine_basis_1d(static_cast<int>(k), x);
    }
    return phi;
  }
  const auto idx = cosine_multi_indices(d, count);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (long k = 0; k < count; ++k) {
      double v = 1.0;
      for (int c = 0; c < d; ++c) {
        v *= cosine_basis_1d(idx[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)], xs(i, c));
      }
      phi(i, k) = v;
    }
  }
  return phi;
}

// --- scalar kernels ---------------------------------------------------------

/// Matern covariance normalized to k(0) = 1:
/// (2^{1-a}/G(a)) z^a K_a(z) with z = sqrt(2a) r / l.
inline double matern_from_distance(double alpha, double length_scale, double r) {
  const double z = std::sqrt(2.0 * alpha) * r / length_scale;
  if (z <= 0.0) return 1.0;
  if (z > 700.0) return 0.0;
  const double log_c = (1.0 - alpha) * std::numbers::ln2 - std::lgamma(alpha);
  const double kz = detail::bessel_k_unchecked(alpha, z);
  if (!std::isfinite(kz)) return 1.0;
  const double v = std::exp(log_c + alpha * std::log(z)) * kz;
  return std::min(v, 1.0);
}

inline double squared_exponential_from_sq_distance(double length_scale,
                                                   double r2) {
  return std::exp(-r2 / (length_scale * length_scale));
}

namespace detail {

inline void check_point(const KernelSpec& spec, Eigen::Index cols) {
  if (cols != spec.dim) {
    throw ConfigError("kernel: point dimension " + std::to_string(cols) +
                      " does not match dim " + std::to_string(spec.dim));
  }
}

inline Eigen::VectorXd series_weights(const KernelSpec& spec, long count) {
  const double s = series_exponent(spec);
  Eigen::VectorXd w(count);
  for (long j = 0; j < count; ++j) w(j) = std::pow(static_cast<double>(j + 1), -s);
  return w;
}

}  // namespace detail

/// k(x, y) for row vectors (or any 1 x d / d x 1 expressions).
template <typename A, typename B>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                   const Eigen::MatrixBase<B>& y) {
  if (x.size() != spec.dim || y.size() != spec.dim) {
    throw ConfigError("kernel: point dimension does not match dim");
  }
  switch (spec.kind) {
    case KernelKind::Matern: {
      double r2 = 0.0;
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        const double diff = x(c) - y(c);
        r2 += diff * diff;
      }
      return matern_from_distance(spec.alpha, spec.length_scale, std::sqrt(r2));
    }
    case KernelKind::SquaredExponential: {
      double r2 = 0.0;
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        const double diff = x(c) - y(c);
        r2 += diff * diff;
      }
      return squared_exponential_from_sq_distance(spec.length_scale, r2);
    }
    case KernelKind::RandomSeries: {
      const long count = series_truncation(spec);
      Points px(1, spec.dim);
      Points py(1, spec.dim);
      for (int c = 0; c < spec.dim; ++c) {
        px(0, c) = x(c);
        py(0, c) = y(c);
      }
      const Eigen::MatrixXd fx = cosine_features(px, count);
      const Eigen::MatrixXd fy = cosine_features(py, count);
      const Eigen::VectorXd w = detail::series_weights(spec, count);
      return (fx.row(0).transpose().array() * w.array() *
              fy.row(0).transpose().array())
          .sum();
    }
  }
  return 0.0;
}

/// Scalar-input convenience for d = 1.
inline double kernel_eval(const KernelSpec& spec, double x, double y) {
  Eigen::Matrix<double, 1, 1> px;
  Eigen::Matrix<double, 1, 1> py;
  px << x;
  py << y;
  return kernel_eval(spec, px, py);
}

/// Cross-covariance [k(a_i, b_j)] (rows of `a` against rows of `b`).
inline Eigen::MatrixXd cross_covariance(const KernelSpec& spec, const Points& a,
                                        const Points& b) {
  spec.validate();
  detail::check_point(spec, a.cols());
  detail::check_point(spec, b.cols());
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  Eigen::MatrixXd k(na, nb);
  switch (spec.kind) {
    case KernelKind::Matern:
    case KernelKind::SquaredExponential: {
      const bool matern = spec.kind == KernelKind::Matern;
      for (Eigen::Index j = 0; j < nb; ++j) {
        for (Eigen::Index i = 0; i < na; ++i) {
          const double r2 = (a.row(i) - b.row(j)).squaredNorm();
          k(i, j) = matern ? matern_from_distance(spec.alpha, spec.length_scale,
                                                  std::sqrt(r2))
                           : squared_exponential_from_sq_distance(
                                 spec.length_scale, r2);
        }
      }
      return k;
    }
    case KernelKind::RandomSeries: {
      const long count = series_truncation(spec);
      const Eigen::VectorXd w = detail::series_weights(spec, count);
      const Eigen::MatrixXd fa = cosine_features(a, count);
      const Eigen::MatrixXd fb = cosine_features(b, count);
      k.noalias() = fa * w.asDiagonal() * fb.transpose();
      return k;
    }
  }
  return k;
}

/// Gram matrix K_ff = [k(x_i, x_j)], exactly symmetric.
inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Points& xs) {
  spec.validate();
  detail::check_point(spec, xs.cols());
  const Eigen::Index n = xs.rows();
  Eigen::MatrixXd k(n, n);
  switch (spec.kind) {
    case KernelKind::Matern:
    case KernelKind::SquaredExponential: {
      const bool matern = spec.kind == KernelKind::Matern;
      for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
          const double r2 = (xs.row(i) - xs.row(j)).squaredNorm();
          const double v = matern ? matern_from_distance(spec.alpha,
                                                         spec.length_scale,
                                                         std::sqrt(r2))
                                  : squared_exponential_from_sq_distance(
                                        spec.length_scale, r2);
          k(i, j) = v;
          k(j, i) = v;
        }
      }
      return k;
    }
    case KernelKind::RandomSeries: {
      const long count = series_truncation(spec);
      Eigen::MatrixXd f = cosine_features(xs, count);
      f *= detail::series_weights(spec, count).array().sqrt().matrix().asDiagonal();
      k.setZero();
      k.selfadjointView<Eigen::Lower>().rankUpdate(f);
      k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
      return k;
    }
  }
  return k;
}

/// Prior variance k(x, x) at each row of `xs`.
inline Eigen::VectorXd kernel_diagonal(const KernelSpec& spec, const Points& xs) {
  detail::check_point(spec, xs.cols());
  if (spec.kind != KernelKind::RandomSeries) {
    return Eigen::VectorXd::Ones(xs.rows());
  }
  const long count = series_truncation(spec);
  const Eigen::MatrixXd f = cosine_features(xs, count);
  const Eigen::VectorXd w = detail::series_weights(spec, count);
  return f.array().square().matrix() * w;
}

// --- operator eigensystems ---------------------------------------------------

/// Eigenpairs (lambda_j, phi_j) of T_k psi(y) = int k(x, y) psi(x) dG(x),
/// with the phi_j orthonormal in L^2(G). Index j is 1-based as in lambda_1 >=
/// lambda_2 >= ...
class OperatorEigensystem {
 public:
  enum class Family { HermiteGaussian, CosineSeries };

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] long count() const noexcept {
    return static_cast<long>(eigenvalues_.size());
  }
  [[nodiscard]] const std::vector<double>& eigenvalues() const noexcept {
    return eigenvalues_;
  }
  [[nodiscard]] double eigenvalue(long j) const {
    check_index(j);
    return eigenvalues_[static_cast<std::size_t>(j - 1)];
  }
  /// sup_j |phi_j| when finite (cosine basis), +inf otherwise.
  [[nodiscard]] double sup_norm_bound() const noexcept { return sup_bound_; }

  /// Sum of lambda_j over j >= from (1-based), including the analytic tail
  /// of the geometric SE spectrum beyond the stored pairs.
  [[nodiscard]] double tail_sum(long from) const {
    if (from < 1) from = 1;
    double s = 0.0;
    for (long j = count(); j >= from; --j) s += eigenvalues_[static_cast<std::size_t>(j - 1)];
    if (family_ == Family::HermiteGaussian) {
      const long start = std::max(from, count() + 1);
      s += eigenvalues_[0] * std::pow(ratio_, static_cast<double>(start - 1)) /
           (1.0 - ratio_);
    }
    return s;
  }

  /// [phi_j(x_i)] for j = 1..m, an n x m matrix.
  [[nodiscard]] Eigen::MatrixXd features(const Points& xs, long m) const {
    if (m < 0 || m > count()) {
      throw ConfigError("operator eigensystem: requested " + std::to_string(m) +
                        " eigenfunctions, " + std::to_string(count()) +
                        " available");
    }
    if (xs.cols() != dim_) {
      throw ConfigError("operator eigensystem: point dimension mismatch");
    }
    if (family_ == Family::CosineSeries) return cosine_features(xs, m);
    Eigen::MatrixXd phi(xs.rows(), m);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      hermite_row(xs(i, 0), m, phi.row(i));
    }
    return phi;
  }

  [[nodiscard]] double eigenfunction(long j, double x) const {
    check_index(j);
    Points p(1, 1);
    p(0, 0) = x;
    return features(p, j)(0, j - 1);
  }

  static OperatorEigensystem hermite_gaussian(double length_scale,
                                              double input_variance,
                                              long count) {
    OperatorEigensystem e;
    e.family_ = Family::HermiteGaussian;
    e.a_ = 1.0 / (4.0 * input_variance);
    const double b2 = length_scale * length_scale;
    e.c_ = std::sqrt(e.a_ * e.a_ + 2.0 * e.a_ / b2);
    const double big_a = e.a_ + 1.0 / b2 + e.c_;
    e.ratio_ = 1.0 / (big_a * b2);
    const double lambda1 = std::sqrt(2.0 * e.a_ / big_a);
    e.eigenvalues_.reserve(static_cast<std::size_t>(count));
    double lam = lambda1;
    for (long j = 0; j < count && lam > 0.0; ++j) {
      e.eigenvalues_.push_back(lam);
      lam *= e.ratio_;
    }
    e.sup_bound_ = std::numeric_limits<double>::infinity();
    return e;
  }

  static OperatorEigensystem cosine_series(const KernelSpec& spec) {
    OperatorEigensystem e;
    e.family_ = Family::CosineSeries;
    e.dim_ = spec.dim;
    const long count = series_truncation(spec);
    const Eigen::VectorXd w = detail::series_weights(spec, count);
    e.eigenvalues_.assign(w.data(), w.data() + w.size());
    e.sup_bound_ = std::pow(std::numbers::sqrt2, spec.dim);
    return e;
  }

  /// Constants of the Gaussian-measure SE expansion (a, c, ratio).
  [[nodiscard]] double hermite_a() const noexcept { return a_; }
  [[nodiscard]] double hermite_c() const noexcept { return c_; }
  [[nodiscard]] double ratio() const noexcept { return ratio_; }

 private:
  void check_index(long j) const {
    if (j < 1 || j > count()) {
      throw ConfigError("operator eigensystem: index out of range");
    }
  }

  // phi_{k+1}(x) = (c/a)^{1/4} e^{-(c-a)x^2} H_k(t) / sqrt(2^k k!), t =
  // sqrt(2c) x, evaluated with the normalized Hermite-function recurrence.
  template <typename Row>
  void hermite_row(double x, long m, Row&& row) const {
    if (m == 0) return;
    const double t = std::sqrt(2.0 * c_) * x;
    double prev = 0.0;
    double cur = std::pow(c_ / a_, 0.25) * std::exp(-(c_ - a_) * x * x);
    row(0) = cur;
    for (long k = 0; k + 1 < m; ++k) {
      const double kk = static_cast<double>(k);
      const double next = std::sqrt(2.0 / (kk + 1.0)) * t * cur -
                          std::sqrt(kk / (kk + 1.0)) * prev;
      prev = cur;
      cur = next;
      row(k + 1) = cur;
    }
  }

  Family family_ = Family::CosineSeries;
  std::vector<double> eigenvalues_;
  int dim_ = 1;
  double a_ = 0.0;
  double c_ = 0.0;
  double ratio_ = 0.0;
  double sup_bound_ = 0.0;
};

/// Number of SE eigenpairs materialized by operator_eigensystem.
inline constexpr long kHermitePairs = 2000;

/// Closed-form operator eigensystem, when one is known: the squared
/// exponential under a centered Gaussian G (d = 1), and the random series
/// under the uniform measure. Matern has none.
inline OperatorEigensystem operator_eigensystem(const KernelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case KernelKind::SquaredExponential:
      if (spec.input_measure.kind != InputMeasure::Kind::CenteredGaussian) {
        throw UnsupportedError(
            "operator eigensystem: squared exponential requires a centered "
            "Gaussian input measure");
      }
      if (spec.dim != 1) {
        throw UnsupportedError(
            "operator eigensystem: squared exponential only for d = 1");
      }
      return OperatorEigensystem::hermite_gaussian(
          spec.length_scale, spec.input_measure.variance, kHermitePairs);
    case KernelKind::RandomSeries:
      return OperatorEigensystem::cosine_series(spec);
    case KernelKind::Matern:
      break;
  }
  throw UnsupportedError(
      "operator eigensystem: no closed form for the Matern kernel");
}

}  // namespace vbgp
