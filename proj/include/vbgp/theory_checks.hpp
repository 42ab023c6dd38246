#pragma once

// Monte Carlo checks of the trace/norm approximation bounds for both
// inducing constructions, the expected-eigenvalue tail inequality, the
// concentration of empirical inner products of bounded orthonormal bases,
// and log-log rate fits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "vbgp/error.hpp"
#include "vbgp/kernels.hpp"
#include "vbgp/parallel.hpp"
#include "vbgp/random.hpp"
#include "vbgp/spectral.hpp"
#include "vbgp/svgp.hpp"

namespace vbgp {

/// n i.i.d. draws from G.
inline Points draw_design(const InputMeasure& measure, Eigen::Index n, int dim,
                          CounterRng& rng) {
  Points xs(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < dim; ++c) {
      xs(i, c) = measure.kind == InputMeasure::Kind::UniformUnitCube
                     ? rng.uniform()
                     : std::sqrt(measure.variance) * rng.normal();
    }
  }
  return xs;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty sample");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// --- expected trace / norm of K_ff - Q_ff ------------------------------------

enum class ReductionQuantity { ExpectedTrace, ExpectedNorm };

inline std::string to_string(ReductionQuantity q) {
  return q == ReductionQuantity::ExpectedTrace ? "ExpectedTrace" : "ExpectedNorm";
}

struct BoundEstimate {
  ReductionQuantity quantity = ReductionQuantity::ExpectedTrace;
  InducingMethod method = InducingMethod::MatrixEig;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double theoretical_bound = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

struct ReductionEstimate {
  BoundEstimate trace;
  BoundEstimate norm;
};

/// Constant of the exponential SE bound: D_exp = 0.9 sqrt(2a).
inline double se_decay_constant(const InputMeasure& measure) {
  const double a = 1.0 / (4.0 * measure.variance);
  return 0.9 * std::sqrt(2.0 * a);
}

/// Reference bounds attached to the estimates. Polynomial kernels use the
/// nominal constant C_alpha = 1 (exact for the random series):
///   trace:          n (d / 2a) m^{-2a/d}
///   norm, method 1: n (1 + d/a) 2^{1+2a/d} m^{-1-2a/d}
///   norm, method 2: 1 + n m^{-1-2a/d} + n^{d/2a} m^{-2a/d} log n
/// The squared exponential uses n exp(-D_exp b m) for both.
inline std::pair<double, double> reduction_bounds(const KernelSpec& spec,
                                                  InducingMethod method,
                                                  Eigen::Index n_i,
                                                  Eigen::Index m_i) {
  const double n = static_cast<double>(n_i);
  const double m = static_cast<double>(m_i);
  if (spec.kind == KernelKind::SquaredExponential) {
    const double b = n * std::exp(-se_decay_constant(spec.input_measure) *
                                  spec.length_scale * m);
    return {b, b};
  }
  const double r = 2.0 * spec.alpha / spec.dim;
  const double trace = n / r * std::pow(m, -r);
  double norm = 0.0;
  if (method == InducingMethod::MatrixEig) {
    norm = n * (1.0 + spec.dim / spec.alpha) * std::pow(2.0, 1.0 + r) *
           std::pow(m, -1.0 - r);
  } else {
    norm = 1.0 + n * std::pow(m, -1.0 - r) +
           std::pow(n, 1.0 / r) * std::pow(m, -r) * std::log(n);
  }
  return {trace, norm};
}

namespace detail {

struct ReductionSample {
  std::vector<double> traces;  // one per (method, m) cell
  std::vector<double> norms;
};

// tr and ||.|| of K_ff - Q_ff for every requested m from one design.
inline void method1_reduction(const Eigen::MatrixXd& k,
                              const std::vector<Eigen::Index>& ms,
                              std::vector<double>& traces,
                              std::vector<double>& norms) {
  const Eigen::Index n = k.rows();
  const Eigen::Index need = std::min(
      n, *std::max_element(ms.begin(), ms.end()) + 1);
  Eigen::VectorXd mu;
  const bool full = n <= 1000 || 4 * need > n;
  if (full) {
    mu = eigenvalues_symmetric(k);
  } else {
    mu = top_m(k, need).eigenvalues;
  }
  const double tr = k.trace();
  for (Eigen::Index m : ms) {
    if (full) {
      traces.push_back(m >= n ? 0.0 : std::max(0.0, mu.tail(n - m).sum()));
    } else {
      traces.push_back(std::max(0.0, tr - mu.head(m).sum()));
    }
    norms.push_back(m >= n ? 0.0 : std::max(0.0, mu(m)));
  }
}

inline void method2_reduction(const Eigen::MatrixXd& k,
                              const OperatorEigensystem& eigsys,
                              const Points& xs,
                              const std::vector<Eigen::Index>& ms,
                              std::vector<double>& traces,
                              std::vector<double>& norms) {
  const Eigen::Index top = *std::max_element(ms.begin(), ms.end());
  const Eigen::MatrixXd phi = eigsys.features(xs, top);
  const double tr = k.trace();
  for (Eigen::Index m : ms) {
    Eigen::MatrixXd f = phi.leftCols(m);
    for (Eigen::Index j = 0; j < m; ++j) f.col(j) *= std::sqrt(eigsys.eigenvalue(j + 1));
    Eigen::MatrixXd r = k;
    r.selfadjointView<Eigen::Lower>().rankUpdate(f, -1.0);
    r.triangularView<Eigen::StrictlyUpper>() = r.transpose();
    traces.push_back(std::max(0.0, tr - f.squaredNorm()));
    norms.push_back(std::max(0.0, top_m(r, 1).eigenvalues(0)));
  }
}

}  // namespace detail

/// Monte Carlo estimates of E_x tr(K_ff - Q_ff) and E_x ||K_ff - Q_ff|| for
/// every (method, m) combination, sharing the design draws and Gram matrices
/// across combinations. Results are ordered method-major.
inline std::vector<ReductionEstimate> reduction_study(
    const KernelSpec& spec, const std::vector<InducingMethod>& methods,
    Eigen::Index n, const std::vector<Eigen::Index>& ms, std::size_t reps,
    std::uint64_t seed, unsigned threads = 1) {
  spec.validate();
  if (reps < 2) throw ConfigError("reduction_study: need at least 2 replications");
  if (methods.empty() || ms.empty()) throw ConfigError("reduction_study: empty grid");
  for (Eigen::Index m : ms) {
    if (m < 1 || m > n) throw ConfigError("reduction_study: m outside [1, n]");
  }
  std::shared_ptr<const OperatorEigensystem> eigsys;
  if (std::find(methods.begin(), methods.end(), InducingMethod::OperatorEig) !=
      methods.end()) {
    eigsys = std::make_shared<const OperatorEigensystem>(operator_eigensystem(spec));
    for (Eigen::Index m : ms) {
      if (m > eigsys->count()) {
        throw ConfigError("reduction_study: m exceeds the available eigenpairs");
      }
    }
  }
  auto samples = run_replications(reps, threads, [&](std::size_t r) {
    CounterRng rng(seed, r, Stream::Design);
    const Points xs = draw_design(spec.input_measure, n, spec.dim, rng);
    const Eigen::MatrixXd k = gram_matrix(spec, xs);
    detail::ReductionSample s;
    for (InducingMethod method : methods) {
      if (method == InducingMethod::MatrixEig) {
        detail::method1_reduction(k, ms, s.traces, s.norms);
      } else {
        detail::method2_reduction(k, *eigsys, xs, ms, s.traces, s.norms);
      }
    }
    return s;
  });

  std::vector<ReductionEstimate> out;
  std::size_t cell = 0;
  for (InducingMethod method : methods) {
    for (Eigen::Index m : ms) {
      std::vector<double> tr;
      std::vector<double> nr;
      for (const auto& s : samples) {
        tr.push_back(s.traces[cell]);
        nr.push_back(s.norms[cell]);
      }
      const auto [tb, nb] = reduction_bounds(spec, method, n, m);
      const auto t = mean_stderr(tr);
      const auto q = mean_stderr(nr);
      out.push_back({{ReductionQuantity::ExpectedTrace, method, n, m, t.mean,
                      t.stderr_, tb, reps, seed},
                     {ReductionQuantity::ExpectedNorm, method, n, m, q.mean,
                      q.stderr_, nb, reps, seed}});
      ++cell;
    }
  }
  return out;
}

inline ReductionEstimate estimate_expected_reduction(const KernelSpec& spec,
                                                     InducingMethod method,
                                                     Eigen::Index n,
                                                     Eigen::Index m,
                                                     std::size_t reps,
                                                     std::uint64_t seed,
                                                     unsigned threads = 1) {
  if (reps < 10) {
    throw ConfigError("estimate_expected_reduction: need at least 10 replications");
  }
  return reduction_study(spec, {method}, n, {m}, reps, seed, threads).front();
}

// --- expected eigenvalue tails ------------------------------------------------

struct ShaweCheck {
  Eigen::Index n = 0;
  Eigen::Index j0 = 0;
  double lhs_mean = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::size_t replications = 0;
};

/// Checks E_x sum_{j>=j0} mu_j / n <= sum_{j>=j0} lambda_j within three Monte
/// Carlo standard errors (plus rounding slack), for each j0.
inline std::vector<ShaweCheck> check_shawe(const KernelSpec& spec, Eigen::Index n,
                                           const std::vector<Eigen::Index>& j0s,
                                           std::size_t reps, std::uint64_t seed,
                                           unsigned threads = 1) {
  spec.validate();
  const OperatorEigensystem eigsys = operator_eigensystem(spec);
  for (Eigen::Index j0 : j0s) {
    if (j0 < 1 || j0 > n) throw ConfigError("check_shawe: j0 outside [1, n]");
  }
  if (reps < 2) throw ConfigError("check_shawe: need at least 2 replications");
  auto samples = run_replications(reps, threads, [&](std::size_t r) {
    CounterRng rng(seed, r, Stream::Design);
    const Points xs = draw_design(spec.input_measure, n, spec.dim, rng);
    const Eigen::MatrixXd k = gram_matrix(spec, xs);
    const Eigen::VectorXd mu = eigenvalues_symmetric(k);
    const double tr = k.trace();
    std::vector<double> lhs;
    for (Eigen::Index j0 : j0s) {
      // head sum subtracted from the exact trace keeps j0 = 1 exact
      lhs.push_back((tr - mu.head(j0 - 1).sum()) / static_cast<double>(n));
    }
    return lhs;
  });
  std::vector<ShaweCheck> out;
  for (std::size_t c = 0; c < j0s.size(); ++c) {
    std::vector<double> v;
    for (const auto& s : samples) v.push_back(s[c]);
    const auto ms = mean_stderr(v);
    ShaweCheck chk;
    chk.n = n;
    chk.j0 = j0s[c];
    chk.lhs_mean = ms.mean;
    chk.lhs_stderr = ms.stderr_;
    chk.rhs = eigsys.tail_sum(j0s[c]);
    chk.holds = chk.lhs_mean <= chk.rhs + 3.0 * chk.lhs_stderr +
                                    1e-12 * std::max(1.0, chk.rhs);
    chk.replications = reps;
    out.push_back(chk);
  }
  return out;
}

// --- empirical orthonormality -------------------------------------------------

struct OrthonormalityResult {
  Eigen::Index n = 0;
  Eigen::Index basis_size = 0;
  std::size_t replications = 0;
  double c_phi = 0.0;
  double threshold = 0.0;  // C = 4 C_phi^2
  /// max_{l,k} |<phi_l, phi_k> - n delta_lk| per replication.
  std::vector<double> raw_deviation;
  /// raw_deviation / sqrt(n log n).
  std::vector<double> normalized_deviation;
  double max_normalized = 0.0;
  double exceed_fraction = 0.0;
  double exceed_stderr = 0.0;
  /// M^2 n^{-(C/C_phi^2)^2 / 2}
  double probability_bound = 0.0;
  bool within_bound = false;
};

/// Empirical Gram matrices of the first M basis functions at n i.i.d. design
/// points, compared against n I.
inline OrthonormalityResult empirical_orthonormality(const KernelSpec& basis_spec,
                                                     Eigen::Index n,
                                                     Eigen::Index basis_size,
                                                     std::size_t reps,
                                                     std::uint64_t seed,
                                                     unsigned threads = 1) {
  basis_spec.validate();
  if (basis_spec.kind != KernelKind::RandomSeries) {
    throw ConfigError("empirical_orthonormality: needs a uniformly bounded basis "
                      "(random series kernel)");
  }
  if (n < 2 || basis_size < 1 || reps < 1) {
    throw ConfigError("empirical_orthonormality: need n >= 2, M >= 1, reps >= 1");
  }
  const OperatorEigensystem eigsys = OperatorEigensystem::cosine_series(basis_spec);
  if (basis_size > eigsys.count()) {
    throw ConfigError("empirical_orthonormality: M exceeds the basis size");
  }
  const double dn = static_cast<double>(n);
  const double scale = std::sqrt(dn * std::log(dn));
  OrthonormalityResult res;
  res.n = n;
  res.basis_size = basis_size;
  res.replications = reps;
  res.c_phi = eigsys.sup_norm_bound();
  res.threshold = 4.0 * res.c_phi * res.c_phi;
  res.raw_deviation = run_replications(reps, threads, [&](std::size_t r) {
    CounterRng rng(seed, r, Stream::Design);
    const Points xs = draw_design(basis_spec.input_measure, n, basis_spec.dim, rng);
    const Eigen::MatrixXd phi = eigsys.features(xs, basis_size);
    Eigen::MatrixXd g = phi.transpose() * phi;
    g.diagonal().array() -= dn;
    return g.cwiseAbs().maxCoeff();
  });
  std::size_t exceed = 0;
  for (double raw : res.raw_deviation) {
    const double z = raw / scale;
    res.normalized_deviation.push_back(z);
    res.max_normalized = std::max(res.max_normalized, z);
    if (z >= res.threshold) ++exceed;
  }
  const double p = static_cast<double>(exceed) / static_cast<double>(reps);
  res.exceed_fraction = p;
  res.exceed_stderr = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
  const double ratio = res.threshold / (res.c_phi * res.c_phi);
  res.probability_bound = static_cast<double>(basis_size * basis_size) *
                          std::pow(dn, -0.5 * ratio * ratio);
  res.within_bound = p <= res.probability_bound + 3.0 * res.exceed_stderr;
  return res;
}

// --- rate fits ------------------------------------------------------------------

struct RateFit {
  std::vector<double> ns;
  std::vector<double> values;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Least-squares line through (log n, log value).
inline RateFit fit_rate(const std::vector<double>& ns,
                        const std::vector<double>& values) {
  if (ns.size() != values.size()) throw ConfigError("fit_rate: size mismatch");
  if (ns.size() < 3) throw ConfigError("fit_rate: need at least 3 points");
  const std::size_t k = ns.size();
  std::vector<double> lx(k);
  std::vector<double> ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0.0) || !(values[i] > 0.0)) {
      throw ConfigError("fit_rate: sample sizes and values must be positive");
    }
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(values[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw ConfigError("fit_rate: sample sizes are all equal");
  RateFit fit;
  fit.ns = ns;
  fit.values = values;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = ly[i] - fit.intercept - fit.slope * lx[i];
    rss += e * e;
  }
  fit.slope_stderr = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  return fit;
}

}  // namespace vbgp
