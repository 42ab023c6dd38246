// Command-line harness: vbgp <subcommand> [--config file.json] [--seed S]
// [--reps R] [--out DIR] [--threads T]

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "vbgp/config.hpp"
#include "vbgp/vbgp.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vbgp;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::string> out;
  unsigned threads = 1;
};

struct Context {
  ExperimentConfig config;
  fs::path out;
  unsigned threads = 1;

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + (out / name).string() + "'");
    return f;
  }
};

Context make_context(const Options& o) {
  Context ctx;
  ctx.config = o.config_path.empty() ? ExperimentConfig::defaults(ExperimentKind::MaternMethod1)
                                     : load_config(o.config_path);
  if (o.seed) ctx.config.seed = *o.seed;
  if (o.reps) {
    ctx.config.replications = *o.reps;
    ctx.config.reps_per_n.clear();
  }
  if (o.out) ctx.config.output_dir = *o.out;
  ctx.config.validate();
  ctx.out = ctx.config.output_dir;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + ctx.out.string() + "'");
  ctx.threads = o.threads;
  return ctx;
}

std::vector<Eigen::Index> sizes_or_n(const ExperimentConfig& c) {
  return c.ns.empty() ? std::vector<Eigen::Index>{c.n} : c.ns;
}

void cmd_simulate(const Context& ctx) {
  const auto& c = ctx.config;
  auto f = ctx.open("data.csv");
  std::vector<std::string> header{"replication"};
  if (c.kernel.dim == 1) {
    header.emplace_back("x");
  } else {
    for (int k = 1; k <= c.kernel.dim; ++k) header.push_back("x" + std::to_string(k));
  }
  header.emplace_back("f0");
  header.emplace_back("y");
  CsvWriter w(f, header);
  const auto data = run_replications(c.replications, ctx.threads,
                                     [&](std::size_t r) { return simulate(c, r); });
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Dataset& d = data[r];
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      w.cell(static_cast<unsigned long>(r));
      for (int k = 0; k < c.kernel.dim; ++k) w.cell(d.xs(i, k));
      w.cell(d.truth(d.xs.row(i))).cell(d.ys(i));
      w.end_row();
    }
  }
}

void cmd_fit(const Context& ctx) {
  const auto& c = ctx.config;
  const RunResult res = run_experiment(c, ctx.threads);
  {
    auto f = ctx.open("fit.csv");
    CsvWriter w(f, {"replication", "n", "m", "method", "kl", "l2_error", "hellinger",
                    "coverage", "mean_width", "exact_l2_error", "exact_coverage",
                    "exact_mean_width"});
    for (std::size_t r = 0; r < res.records.size(); ++r) {
      const auto& x = res.records[r];
      w.cell(static_cast<unsigned long>(r))
          .cell(static_cast<long>(c.n))
          .cell(static_cast<long>(c.m))
          .cell(to_string(c.method))
          .cell(x.kl)
          .cell(x.l2_error)
          .cell(x.hellinger)
          .cell(x.coverage)
          .cell(x.mean_width)
          .cell(x.exact_l2_error)
          .cell(x.exact_coverage)
          .cell(x.exact_mean_width);
      w.end_row();
    }
  }
  {
    auto f = ctx.open("fit_summary.csv");
    CsvWriter w(f, {"metric", "mean", "stderr"});
    const std::pair<const char*, Aggregate> rows[] = {{"kl", res.kl},
                                                      {"l2_error", res.l2_error},
                                                      {"hellinger", res.hellinger},
                                                      {"coverage", res.coverage},
                                                      {"mean_width", res.mean_width}};
    for (const auto& [name, a] : rows) {
      w.cell(name).cell(a.mean).cell(a.stderr_);
      w.end_row();
    }
  }
  // wall times vary run to run, so they stay out of the CSV outputs
  nlohmann::json t;
  t["exact_seconds_mean"] = res.exact_seconds.mean;
  t["variational_seconds_mean"] = res.variational_seconds.mean;
  t["replications"] = res.records.size();
  auto f = ctx.open("timings.json");
  f << t.dump(2) << '\n';
}

void cmd_kl_table(const Context& ctx) {
  const SizeStudy st = kl_table(ctx.config, ctx.threads);
  {
    auto f = ctx.open("kl_table.csv");
    CsvWriter w(f, {"n", "m", "reps", "kl_mean", "kl_stderr"});
    for (const auto& r : st.rows) {
      w.cell(static_cast<long>(r.n))
          .cell(static_cast<long>(r.m))
          .cell(static_cast<unsigned long>(r.replications))
          .cell(r.kl.mean)
          .cell(r.kl.stderr_);
      w.end_row();
    }
  }
  if (st.fit) {
    auto f = ctx.open("kl_table_fit.csv");
    CsvWriter w(f, {"slope", "slope_stderr", "intercept"});
    w.cell(st.fit->slope).cell(st.fit->slope_stderr).cell(st.fit->intercept);
    w.end_row();
  }
}

void cmd_rate_study(const Context& ctx) {
  const SizeStudy st = rate_study(ctx.config, ctx.threads);
  {
    auto f = ctx.open("rate_study.csv");
    CsvWriter w(f, {"n", "m", "reps", "l2_mean", "l2_stderr", "hellinger_mean",
                    "hellinger_stderr"});
    for (const auto& r : st.rows) {
      w.cell(static_cast<long>(r.n))
          .cell(static_cast<long>(r.m))
          .cell(static_cast<unsigned long>(r.replications))
          .cell(r.l2_error.mean)
          .cell(r.l2_error.stderr_)
          .cell(r.hellinger.mean)
          .cell(r.hellinger.stderr_);
      w.end_row();
    }
  }
  if (st.fit) {
    auto f = ctx.open("rate_study_fit.csv");
    CsvWriter w(f, {"slope", "slope_stderr", "intercept"});
    w.cell(st.fit->slope).cell(st.fit->slope_stderr).cell(st.fit->intercept);
    w.end_row();
  }
}

void cmd_bounds_check(const Context& ctx) {
  const auto& c = ctx.config;
  const auto ms = c.ms.empty() ? std::vector<Eigen::Index>{c.m} : c.ms;
  {
    auto f = ctx.open("bounds.csv");
    CsvWriter w(f, {"quantity", "n", "m", "mc_mean", "mc_stderr", "bound", "reps", "seed",
                    "method"});
    for (Eigen::Index n : sizes_or_n(c)) {
      const KernelSpec spec = c.kernel_at(n);
      const auto est = reduction_study(spec, c.methods, n, ms, c.replications, c.seed,
                                       ctx.threads);
      for (const auto& e : est) {
        for (const BoundEstimate* b : {&e.trace, &e.norm}) {
          w.cell(to_string(b->quantity))
              .cell(static_cast<long>(b->n))
              .cell(static_cast<long>(b->m))
              .cell(b->mc_mean)
              .cell(b->mc_stderr)
              .cell(b->theoretical_bound)
              .cell(static_cast<unsigned long>(b->replications))
              .cell(static_cast<unsigned long long>(b->seed))
              .cell(to_string(b->method));
          w.end_row();
        }
      }
    }
  }
  if (!c.j0s.empty()) {
    auto f = ctx.open("shawe.csv");
    CsvWriter w(f, {"n", "j0", "lhs_mean", "lhs_stderr", "rhs", "holds", "reps"});
    for (Eigen::Index n : sizes_or_n(c)) {
      for (const auto& s :
           check_shawe(c.kernel_at(n), n, c.j0s, c.replications, c.seed, ctx.threads)) {
        w.cell(static_cast<long>(s.n))
            .cell(static_cast<long>(s.j0))
            .cell(s.lhs_mean)
            .cell(s.lhs_stderr)
            .cell(s.rhs)
            .cell(s.holds)
            .cell(static_cast<unsigned long>(s.replications));
        w.end_row();
      }
    }
  }
}

void cmd_orthonormality(const Context& ctx) {
  const auto& c = ctx.config;
  auto f = ctx.open("orthonormality.csv");
  CsvWriter w(f, {"n", "replication", "raw_deviation", "normalized_deviation"});
  auto g = ctx.open("orthonormality_summary.csv");
  CsvWriter s(g, {"n", "basis_size", "reps", "c_phi", "threshold", "max_normalized",
                  "exceed_fraction", "exceed_stderr", "probability_bound", "within_bound"});
  for (Eigen::Index n : sizes_or_n(c)) {
    const auto r = empirical_orthonormality(c.kernel, n, c.basis_size, c.replications,
                                            c.seed, ctx.threads);
    for (std::size_t k = 0; k < r.raw_deviation.size(); ++k) {
      w.cell(static_cast<long>(n))
          .cell(static_cast<unsigned long>(k))
          .cell(r.raw_deviation[k])
          .cell(r.normalized_deviation[k]);
      w.end_row();
    }
    s.cell(static_cast<long>(n))
        .cell(static_cast<long>(r.basis_size))
        .cell(static_cast<unsigned long>(r.replications))
        .cell(r.c_phi)
        .cell(r.threshold)
        .cell(r.max_normalized)
        .cell(r.exceed_fraction)
        .cell(r.exceed_stderr)
        .cell(r.probability_bound)
        .cell(r.within_bound);
    s.end_row();
  }
}

void cmd_curves(const Context& ctx) {
  const PosteriorCurves pc = posterior_curves(ctx.config);
  auto f = ctx.open("curves.csv");
  CsvWriter w(f, {"x", "f0", "exact_mean", "exact_lo", "exact_hi", "var_mean", "var_lo",
                  "var_hi"});
  for (Eigen::Index i = 0; i < pc.grid.rows(); ++i) {
    w.cell(pc.grid(i, 0))
        .cell(pc.f0(i))
        .cell(pc.exact_mean(i))
        .cell(pc.exact_band.lower(i))
        .cell(pc.exact_band.upper(i))
        .cell(pc.var_mean(i))
        .cell(pc.var_band.lower(i))
        .cell(pc.var_band.upper(i));
    w.end_row();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse variational GP regression with spectral inducing variables"};
  app.require_subcommand(1, 1);
  Options opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON configuration file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "RNG seed");
    sub->add_option("--reps", opt.reps, "number of replications");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
  };
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Context&);
  };
  const Command commands[] = {
      {"simulate", "draw datasets", cmd_simulate},
      {"fit", "exact and variational fits with accuracy summaries", cmd_fit},
      {"kl-table", "mean KL against n with m = n^{d/(d+2a)}", cmd_kl_table},
      {"bounds-check", "Monte Carlo trace/norm bounds and eigenvalue tails",
       cmd_bounds_check},
      {"orthonormality", "empirical inner products of the cosine basis",
       cmd_orthonormality},
      {"curves", "exact and variational posterior curves", cmd_curves},
      {"rate-study", "L2 error of the variational mean against n", cmd_rate_study},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) commands[i].run(make_context(opt));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
