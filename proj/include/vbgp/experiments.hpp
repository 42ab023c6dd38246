#pragma once

// Simulation harness for the regression experiments: data generation,
// exact and variational fits, KL tables, rate studies and posterior curves.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vbgp/error.hpp"
#include "vbgp/gp_core.hpp"
#include "vbgp/kernels.hpp"
#include "vbgp/metrics.hpp"
#include "vbgp/parallel.hpp"
#include "vbgp/quadrature.hpp"
#include "vbgp/random.hpp"
#include "vbgp/svgp.hpp"
#include "vbgp/theory_checks.hpp"

namespace vbgp {

enum class ExperimentKind { MaternMethod1, SqExpMethod2, SeriesEither, Custom };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::MaternMethod1: return "MaternMethod1";
    case ExperimentKind::SqExpMethod2: return "SqExpMethod2";
    case ExperimentKind::SeriesEither: return "SeriesEither";
    case ExperimentKind::Custom: return "Custom";
  }
  return "?";
}

enum class TruthKind { PaperMatern, PaperSqExp, Custom };

/// Regression truth f0.
///   PaperMatern: |x - 0.4|^a - |x - 0.2|^a
///   PaperSqExp:  |x + 1|^a - |x + 1.5|^a, held constant outside [-clip, clip]
///   Custom:      sum_k c_k phi_k(x) in the cosine basis (plus `shift`)
struct TruthSpec {
  TruthKind kind = TruthKind::PaperMatern;
  double alpha = 0.6;
  double clip = 6.0;
  std::vector<double> coefficients;
  double shift = 0.0;
};

inline RegressionFunction make_truth(const TruthSpec& t) {
  const double a = t.alpha;
  switch (t.kind) {
    case TruthKind::PaperMatern:
      return [a](const Eigen::RowVectorXd& x) {
        return std::pow(std::abs(x(0) - 0.4), a) - std::pow(std::abs(x(0) - 0.2), a);
      };
    case TruthKind::PaperSqExp: {
      const double clip = t.clip;
      return [a, clip](const Eigen::RowVectorXd& x) {
        const double u = std::clamp(x(0), -clip, clip);
        return std::pow(std::abs(u + 1.0), a) - std::pow(std::abs(u + 1.5), a);
      };
    }
    case TruthKind::Custom: {
      const std::vector<double> c = t.coefficients;
      const double shift = t.shift;
      return [c, shift](const Eigen::RowVectorXd& x) {
        Points p = x;
        const Eigen::MatrixXd phi =
            cosine_features(p, static_cast<long>(std::max<std::size_t>(c.size(), 1)));
        double v = shift;
        for (std::size_t k = 0; k < c.size(); ++k) v += c[k] * phi(0, static_cast<Eigen::Index>(k));
        return v;
      };
    }
  }
  throw ConfigError("unknown truth");
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::MaternMethod1;
  Eigen::Index n = 3000;
  Eigen::Index m = 40;
  double alpha = 0.6;
  double sigma = 0.2;
  KernelSpec kernel = KernelSpec::matern(0.6);
  /// SE only: use b = b_scale * n^{-1/(1+2a)} instead of kernel.length_scale.
  bool auto_length_scale = false;
  double b_scale = 4.0;
  InducingMethod method = InducingMethod::MatrixEig;
  TruthSpec truth;
  std::uint64_t seed = 1;
  std::size_t replications = 1;
  Eigen::Index grid_size = 200;
  /// Fraction of the data range (centered) used for coverage and widths.
  double band_fraction = 0.8;
  double band_level = 0.95;
  /// Sample sizes for kl-table / rate-study.
  std::vector<Eigen::Index> ns;
  /// Optional per-n replication counts (same length as ns).
  std::vector<std::size_t> reps_per_n;
  /// Inducing sizes and constructions for bounds-check.
  std::vector<Eigen::Index> ms;
  std::vector<InducingMethod> methods = {InducingMethod::MatrixEig,
                                         InducingMethod::OperatorEig};
  /// Tail indices for the eigenvalue tail check.
  std::vector<Eigen::Index> j0s;
  /// Basis size for the orthonormality check.
  Eigen::Index basis_size = 10;
  std::string output_dir = ".";

  static ExperimentConfig defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
      case ExperimentKind::MaternMethod1:
        break;
      case ExperimentKind::SqExpMethod2:
        c.n = 5000;
        c.m = 80;
        c.alpha = 0.8;
        c.kernel = KernelSpec::squared_exponential(1.0, InputMeasure::gaussian(1.0));
        c.kernel.alpha = 0.8;
        c.auto_length_scale = true;
        c.method = InducingMethod::OperatorEig;
        c.truth.kind = TruthKind::PaperSqExp;
        c.truth.alpha = 0.8;
        break;
      case ExperimentKind::SeriesEither:
        c.n = 1000;
        c.m = 20;
        c.alpha = 1.0;
        c.kernel = KernelSpec::random_series(1.0);
        c.method = InducingMethod::OperatorEig;
        c.truth.alpha = 0.6;
        break;
      case ExperimentKind::Custom:
        break;
    }
    return c;
  }

  /// Kernel used at sample size n.
  [[nodiscard]] KernelSpec kernel_at(Eigen::Index n_at) const {
    KernelSpec k = kernel;
    if (auto_length_scale && k.kind == KernelKind::SquaredExponential) {
      k.length_scale =
          b_scale * std::pow(static_cast<double>(n_at), -1.0 / (1.0 + 2.0 * alpha));
    }
    return k;
  }

  /// m = round(n^{d/(d+2a)}) for the rate experiments.
  [[nodiscard]] Eigen::Index rate_m(Eigen::Index n_at) const {
    const double d = kernel.dim;
    return std::max<Eigen::Index>(
        1, std::llround(std::pow(static_cast<double>(n_at), d / (d + 2.0 * alpha))));
  }

  [[nodiscard]] std::size_t reps_at(std::size_t i) const {
    return reps_per_n.empty() ? replications : reps_per_n.at(i);
  }

  void validate() const {
    kernel.validate();
    if (n < 1) throw ConfigError("config: n must be >= 1");
    if (m < 1 || m > n) throw ConfigError("config: need n >= m >= 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("config: sigma must be positive");
    }
    if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");
    if (replications < 1) throw ConfigError("config: replications must be >= 1");
    if (grid_size < 2) throw ConfigError("config: grid size must be >= 2");
    if (!(band_fraction > 0.0 && band_fraction <= 1.0)) {
      throw ConfigError("config: band_fraction must lie in (0, 1]");
    }
    if (!(band_level > 0.0 && band_level < 1.0)) {
      throw ConfigError("config: band_level must lie in (0, 1)");
    }
    if (!reps_per_n.empty() && reps_per_n.size() != ns.size()) {
      throw ConfigError("config: reps_per_n must match ns");
    }
    for (std::size_t r : reps_per_n) {
      if (r < 1) throw ConfigError("config: reps_per_n entries must be >= 1");
    }
    for (Eigen::Index v : ns) {
      if (v < 2) throw ConfigError("config: ns entries must be >= 2");
    }
    if (truth.kind != TruthKind::Custom && kernel.dim != 1) {
      throw ConfigError("config: the built-in truths are one-dimensional");
    }
  }
};

// --- simulation ------------------------------------------------------------------

/// n draws x ~ G and y = f0(x) + sigma * eps for one replication.
inline Dataset simulate_at(const ExperimentConfig& config, Eigen::Index n,
                           std::size_t replication) {
  const KernelSpec& k = config.kernel;
  CounterRng design(config.seed, replication, Stream::Design);
  CounterRng noise(config.seed, replication, Stream::Noise);
  Dataset d;
  d.xs = draw_design(k.input_measure, n, k.dim, design);
  d.truth = make_truth(config.truth);
  d.ys.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double eps = noise.normal();
    d.ys(i) = d.truth(d.xs.row(i)) + config.sigma * eps;
  }
  d.noise_sd = config.sigma;
  return d;
}

inline Dataset simulate(const ExperimentConfig& config, std::size_t replication = 0) {
  return simulate_at(config, config.n, replication);
}

// --- single fit ------------------------------------------------------------------

struct ReplicationRecord {
  double kl = 0.0;
  double l2_error = 0.0;
  double hellinger = 0.0;
  double coverage = 0.0;
  double mean_width = 0.0;
  double exact_l2_error = 0.0;
  double exact_coverage = 0.0;
  double exact_mean_width = 0.0;
  double exact_seconds = 0.0;
  double variational_seconds = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct RunResult {
  std::vector<ReplicationRecord> records;
  Aggregate kl;
  Aggregate l2_error;
  Aggregate hellinger;
  Aggregate coverage;
  Aggregate mean_width;
  Aggregate exact_seconds;
  Aggregate variational_seconds;
};

/// Evenly spaced grid over the central `fraction` of [lo, hi].
inline Points central_grid(double lo, double hi, double fraction, Eigen::Index size) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo) * fraction;
  Points g(size, 1);
  g.col(0) = Eigen::VectorXd::LinSpaced(size, mid - half, mid + half);
  return g;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline InducingSet build_inducing(const ExperimentConfig& config,
                                  const KernelSpec& spec, const Dataset& data,
                                  Eigen::Index m,
                                  std::shared_ptr<const Eigen::MatrixXd> k_ff) {
  if (config.method == InducingMethod::MatrixEig) {
    return inducing_method1(std::move(k_ff), m, data.xs);
  }
  auto eigsys = std::make_shared<const OperatorEigensystem>(operator_eigensystem(spec));
  return inducing_method2(std::move(eigsys), data.xs, m, std::move(k_ff));
}

inline Aggregate aggregate(const std::vector<ReplicationRecord>& rs,
                           double ReplicationRecord::*field) {
  std::vector<double> v;
  v.reserve(rs.size());
  for (const auto& r : rs) v.push_back(r.*field);
  const auto ms = mean_stderr(v);
  return {ms.mean, ms.stderr_};
}

}  // namespace detail

/// One replication at sample size n with m inducing variables.
inline ReplicationRecord run_replication(const ExperimentConfig& config,
                                         Eigen::Index n, Eigen::Index m,
                                         std::size_t replication,
                                         bool with_exact = true) {
  const KernelSpec spec = config.kernel_at(n);
  const Dataset data = simulate_at(config, n, replication);
  const QuadratureRule rule = default_rule(spec.input_measure, spec.dim, config.seed);
  const Eigen::VectorXd f0_nodes = detail::values_at(data.truth, rule.nodes);

  const auto t_gram = detail::Clock::now();
  auto k_ff = std::make_shared<const Eigen::MatrixXd>(gram_matrix(spec, data.xs));
  const double gram_seconds = detail::seconds_since(t_gram);

  ReplicationRecord rec;
  const bool one_dim = spec.dim == 1;
  Points band_grid;
  Eigen::VectorXd f0_band;
  if (one_dim) {
    band_grid = central_grid(data.xs.col(0).minCoeff(), data.xs.col(0).maxCoeff(),
                             config.band_fraction, config.grid_size);
    f0_band = detail::values_at(data.truth, band_grid);
  }

  const auto t_var = detail::Clock::now();
  const InducingSet ind = detail::build_inducing(config, spec, data, m, k_ff);
  const VariationalParams params = optimal_variational_params(ind, data);
  const GaussianPredictive var_nodes =
      variational_predictive(ind, params, spec, rule.nodes, false);
  std::optional<GaussianPredictive> var_band;
  if (one_dim) var_band = variational_predictive(ind, params, spec, band_grid, false);
  rec.variational_seconds = gram_seconds + detail::seconds_since(t_var);

  rec.l2_error = l2_distance(var_nodes.mean, f0_nodes, rule);
  rec.hellinger = hellinger(var_nodes.mean, f0_nodes, data.noise_sd, rule);
  if (var_band) {
    const auto s = band_summary(credible_band(*var_band, config.band_level), f0_band);
    rec.coverage = s.coverage;
    rec.mean_width = s.mean_width;
  }
  rec.kl = kl_variational_to_posterior(ind, data);

  if (with_exact) {
    const auto t_exact = detail::Clock::now();
    const Points& grid = one_dim ? band_grid : rule.nodes;
    const GaussianPredictive ex = exact_posterior(data, spec, grid, false, k_ff.get());
    rec.exact_seconds = gram_seconds + detail::seconds_since(t_exact);
    if (one_dim) {
      const auto s = band_summary(credible_band(ex, config.band_level), f0_band);
      rec.exact_coverage = s.coverage;
      rec.exact_mean_width = s.mean_width;
      const GaussianPredictive ex_nodes =
          exact_posterior(data, spec, rule.nodes, false, k_ff.get());
      rec.exact_l2_error = l2_distance(ex_nodes.mean, f0_nodes, rule);
    } else {
      rec.exact_l2_error = l2_distance(ex.mean, f0_nodes, rule);
    }
  }
  return rec;
}

/// All replications of the configured (n, m) experiment.
inline RunResult run_experiment(const ExperimentConfig& config, unsigned threads = 1,
                                bool with_exact = true) {
  config.validate();
  RunResult res;
  res.records = run_replications(config.replications, threads, [&](std::size_t r) {
    return run_replication(config, config.n, config.m, r, with_exact);
  });
  using R = ReplicationRecord;
  res.kl = detail::aggregate(res.records, &R::kl);
  res.l2_error = detail::aggregate(res.records, &R::l2_error);
  res.hellinger = detail::aggregate(res.records, &R::hellinger);
  res.coverage = detail::aggregate(res.records, &R::coverage);
  res.mean_width = detail::aggregate(res.records, &R::mean_width);
  res.exact_seconds = detail::aggregate(res.records, &R::exact_seconds);
  res.variational_seconds = detail::aggregate(res.records, &R::variational_seconds);
  return res;
}

// --- KL table and rate studies -----------------------------------------------------

struct SizeRow {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::size_t replications = 0;
  Aggregate kl;
  Aggregate l2_error;
  Aggregate hellinger;
};

struct SizeStudy {
  std::vector<SizeRow> rows;
  /// Log-log fit of the studied quantity (mean KL or mean L2 error) in n.
  std::optional<RateFit> fit;
};

namespace detail {

inline double kl_only(const ExperimentConfig& config, Eigen::Index n, Eigen::Index m,
                      std::size_t replication) {
  const KernelSpec spec = config.kernel_at(n);
  const Dataset data = simulate_at(config, n, replication);
  auto k_ff = std::make_shared<const Eigen::MatrixXd>(gram_matrix(spec, data.xs));
  const InducingSet ind = build_inducing(config, spec, data, m, std::move(k_ff));
  return kl_variational_to_posterior(ind, data);
}

inline ReplicationRecord accuracy_only(const ExperimentConfig& config, Eigen::Index n,
                                       Eigen::Index m, std::size_t replication) {
  const KernelSpec spec = config.kernel_at(n);
  const Dataset data = simulate_at(config, n, replication);
  const QuadratureRule rule = default_rule(spec.input_measure, spec.dim, config.seed);
  const Eigen::VectorXd f0_nodes = values_at(data.truth, rule.nodes);
  std::shared_ptr<const Eigen::MatrixXd> k_ff;
  if (config.method == InducingMethod::MatrixEig) {
    k_ff = std::make_shared<const Eigen::MatrixXd>(gram_matrix(spec, data.xs));
  }
  const InducingSet ind = build_inducing(config, spec, data, m, std::move(k_ff));
  const VariationalParams params = optimal_variational_params(ind, data);
  const GaussianPredictive pred = variational_predictive(ind, params, spec, rule.nodes, false);
  ReplicationRecord rec;
  rec.l2_error = l2_distance(pred.mean, f0_nodes, rule);
  rec.hellinger = hellinger(pred.mean, f0_nodes, data.noise_sd, rule);
  return rec;
}

inline void require_sizes(const ExperimentConfig& config) {
  if (config.ns.empty()) throw ConfigError("config: ns is empty");
}

}  // namespace detail

/// Mean KL across replications for each n in config.ns, with
/// m = round(n^{d/(d+2a)}), and its log-log slope in n.
inline SizeStudy kl_table(const ExperimentConfig& config, unsigned threads = 1) {
  config.validate();
  detail::require_sizes(config);
  SizeStudy st;
  for (std::size_t i = 0; i < config.ns.size(); ++i) {
    SizeRow row;
    row.n = config.ns[i];
    row.m = config.rate_m(row.n);
    row.replications = config.reps_at(i);
    const auto kls = run_replications(row.replications, threads, [&](std::size_t r) {
      return detail::kl_only(config, row.n, row.m, r);
    });
    const auto ms = mean_stderr(kls);
    row.kl = {ms.mean, ms.stderr_};
    st.rows.push_back(row);
  }
  if (st.rows.size() >= 3) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& r : st.rows) {
      x.push_back(static_cast<double>(r.n));
      y.push_back(r.kl.mean);
    }
    if (std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; })) {
      st.fit = fit_rate(x, y);
    }
  }
  return st;
}

/// Mean L2(G) and Hellinger error of the variational posterior mean for each
/// n in config.ns (m = round(n^{d/(d+2a)})), with the L2 log-log slope.
inline SizeStudy rate_study(const ExperimentConfig& config, unsigned threads = 1) {
  config.validate();
  detail::require_sizes(config);
  SizeStudy st;
  for (std::size_t i = 0; i < config.ns.size(); ++i) {
    SizeRow row;
    row.n = config.ns[i];
    row.m = config.rate_m(row.n);
    row.replications = config.reps_at(i);
    const auto recs = run_replications(row.replications, threads, [&](std::size_t r) {
      return detail::accuracy_only(config, row.n, row.m, r);
    });
    row.l2_error = detail::aggregate(recs, &ReplicationRecord::l2_error);
    row.hellinger = detail::aggregate(recs, &ReplicationRecord::hellinger);
    st.rows.push_back(row);
  }
  if (st.rows.size() >= 3) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& r : st.rows) {
      x.push_back(static_cast<double>(r.n));
      y.push_back(r.l2_error.mean);
    }
    st.fit = fit_rate(x, y);
  }
  return st;
}

// --- posterior curves --------------------------------------------------------------

struct PosteriorCurves {
  Points grid;
  Eigen::VectorXd f0;
  Eigen::VectorXd exact_mean;
  CredibleBand exact_band;
  Eigen::VectorXd var_mean;
  CredibleBand var_band;
};

/// Exact and variational posteriors of replication 0 on an evenly spaced grid
/// over the data range (one-dimensional inputs).
inline PosteriorCurves posterior_curves(const ExperimentConfig& config) {
  config.validate();
  if (config.kernel.dim != 1) {
    throw UnsupportedError("posterior_curves: one-dimensional inputs only");
  }
  const KernelSpec spec = config.kernel_at(config.n);
  const Dataset data = simulate_at(config, config.n, 0);
  auto k_ff = std::make_shared<const Eigen::MatrixXd>(gram_matrix(spec, data.xs));
  PosteriorCurves c;
  c.grid = central_grid(data.xs.col(0).minCoeff(), data.xs.col(0).maxCoeff(), 1.0,
                        config.grid_size);
  c.f0 = detail::values_at(data.truth, c.grid);
  const GaussianPredictive ex = exact_posterior(data, spec, c.grid, false, k_ff.get());
  c.exact_mean = ex.mean;
  c.exact_band = credible_band(ex, config.band_level);
  const InducingSet ind = detail::build_inducing(config, spec, data, config.m, k_ff);
  const VariationalParams params = optimal_variational_params(ind, data);
  const GaussianPredictive vp = variational_predictive(ind, params, spec, c.grid, false);
  c.var_mean = vp.mean;
  c.var_band = credible_band(vp, config.band_level);
  return c;
}

// --- CSV -----------------------------------------------------------------------------

/// Shortest round-trip text for doubles is not fixed-width; rows use 17
/// significant digits in the C locale regardless of the global locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
    columns_ = header.size();
  }

  CsvWriter& cell(double v) { return put(format_double(v)); }
  CsvWriter& cell(long long v) { return put(std::to_string(v)); }
  CsvWriter& cell(long v) { return put(std::to_string(v)); }
  CsvWriter& cell(unsigned long v) { return put(std::to_string(v)); }
  CsvWriter& cell(unsigned long long v) { return put(std::to_string(v)); }
  CsvWriter& cell(int v) { return put(std::to_string(v)); }
  CsvWriter& cell(bool v) { return put(v ? "true" : "false"); }
  CsvWriter& cell(const std::string& v) { return put(v); }
  CsvWriter& cell(const char* v) { return put(v); }

  void end_row() {
    if (filled_ != columns_) {
      throw ConfigError("csv: row has " + std::to_string(filled_) + " cells, header has " +
                        std::to_string(columns_));
    }
    out_ << '\n';
    filled_ = 0;
  }

 private:
  CsvWriter& put(const std::string& s) {
    if (filled_ > 0) out_ << ',';
    out_ << s;
    ++filled_;
    return *this;
  }

  std::ostream& out_;
  std::size_t columns_ = 0;
  std::size_t filled_ = 0;
};

}  // namespace vbgp
