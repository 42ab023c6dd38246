#pragma once

// JSON configuration files for the experiment harness.

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "vbgp/error.hpp"
#include "vbgp/experiments.hpp"

namespace vbgp {

namespace detail {

using Json = nlohmann::json;

inline void reject_unknown(const Json& obj, const std::set<std::string>& known,
                           const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_as(const Json& obj, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline ExperimentKind parse_experiment(const std::string& s) {
  if (s == "MaternMethod1") return ExperimentKind::MaternMethod1;
  if (s == "SqExpMethod2") return ExperimentKind::SqExpMethod2;
  if (s == "SeriesEither") return ExperimentKind::SeriesEither;
  if (s == "Custom") return ExperimentKind::Custom;
  throw ConfigError("config: unknown experiment '" + s + "'");
}

inline InducingMethod parse_method(const std::string& s) {
  if (s == "MatrixEig" || s == "method1" || s == "1") return InducingMethod::MatrixEig;
  if (s == "OperatorEig" || s == "method2" || s == "2") return InducingMethod::OperatorEig;
  throw ConfigError("config: unknown inducing method '" + s + "'");
}

inline InducingMethod parse_method(const Json& j) {
  if (j.is_number_integer()) return parse_method(std::to_string(j.get<int>()));
  if (!j.is_string()) throw ConfigError("config: inducing method must be a string");
  return parse_method(j.get<std::string>());
}

inline KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "Matern" || s == "matern") return KernelKind::Matern;
  if (s == "SquaredExponential" || s == "se") return KernelKind::SquaredExponential;
  if (s == "RandomSeries" || s == "series") return KernelKind::RandomSeries;
  throw ConfigError("config: unknown kernel kind '" + s + "'");
}

inline TruthKind parse_truth_kind(const std::string& s) {
  if (s == "PaperMatern") return TruthKind::PaperMatern;
  if (s == "PaperSqExp") return TruthKind::PaperSqExp;
  if (s == "Custom") return TruthKind::Custom;
  throw ConfigError("config: unknown truth '" + s + "'");
}

inline InputMeasure parse_measure(const Json& j) {
  reject_unknown(j, {"kind", "variance"}, "input_measure");
  const auto kind = get_as<std::string>(j, "kind");
  if (kind == "uniform") return InputMeasure::uniform();
  if (kind == "gaussian") {
    return InputMeasure::gaussian(j.contains("variance") ? get_as<double>(j, "variance") : 1.0);
  }
  throw ConfigError("config: unknown input measure '" + kind + "'");
}

// Returns whether alpha was given explicitly.
inline bool apply_kernel(const Json& j, KernelSpec& k) {
  reject_unknown(j, {"kind", "alpha", "length_scale", "dim", "J", "basis", "input_measure"},
                 "kernel");
  if (j.contains("kind")) {
    const KernelKind kind = parse_kernel_kind(get_as<std::string>(j, "kind"));
    if (kind != k.kind) {
      k.kind = kind;
      k.input_measure = kind == KernelKind::SquaredExponential ? InputMeasure::gaussian(1.0)
                                                               : InputMeasure::uniform();
    }
  }
  if (j.contains("alpha")) k.alpha = get_as<double>(j, "alpha");
  if (j.contains("length_scale")) k.length_scale = get_as<double>(j, "length_scale");
  if (j.contains("dim")) k.dim = get_as<int>(j, "dim");
  if (j.contains("J")) k.series_terms = get_as<long>(j, "J");
  if (j.contains("basis") && get_as<std::string>(j, "basis") != "cosine") {
    throw ConfigError("config: only the cosine basis is available");
  }
  if (j.contains("input_measure")) k.input_measure = parse_measure(j.at("input_measure"));
  return j.contains("alpha");
}

inline bool apply_truth(const Json& j, TruthSpec& t) {
  reject_unknown(j, {"kind", "alpha", "clip", "coefficients", "shift"}, "truth");
  if (j.contains("kind")) t.kind = parse_truth_kind(get_as<std::string>(j, "kind"));
  if (j.contains("alpha")) t.alpha = get_as<double>(j, "alpha");
  if (j.contains("clip")) t.clip = get_as<double>(j, "clip");
  if (j.contains("coefficients")) t.coefficients = get_as<std::vector<double>>(j, "coefficients");
  if (j.contains("shift")) t.shift = get_as<double>(j, "shift");
  return j.contains("alpha");
}

template <typename T>
std::vector<T> non_negative_list(const Json& j, const char* key) {
  const auto v = get_as<std::vector<long long>>(j, key);
  std::vector<T> out;
  for (long long x : v) {
    if (x < 0) throw ConfigError(std::string("config: negative entry in '") + key + "'");
    out.push_back(static_cast<T>(x));
  }
  return out;
}

template <typename T>
T non_negative(const Json& j, const char* key) {
  const auto v = get_as<long long>(j, key);
  if (v < 0) throw ConfigError(std::string("config: '") + key + "' must be >= 0");
  return static_cast<T>(v);
}

}  // namespace detail

/// Builds a configuration from JSON. The "experiment" key selects the
/// defaults that the remaining keys override; unknown keys are rejected. A
/// top-level "alpha" also sets the kernel and truth smoothness unless those
/// objects give their own.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::get_as;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown(
      j,
      {"experiment", "n", "m", "alpha", "sigma", "kernel", "auto_length_scale", "b_scale",
       "method", "methods", "truth", "seed", "replications", "grid_size", "band_fraction",
       "band_level", "ns", "reps_per_n", "ms", "j0s", "basis_size", "output_dir"},
      "config");
  ExperimentConfig c = ExperimentConfig::defaults(
      j.contains("experiment") ? detail::parse_experiment(get_as<std::string>(j, "experiment"))
                               : ExperimentKind::MaternMethod1);
  bool kernel_alpha = false;
  bool truth_alpha = false;
  if (j.contains("kernel")) kernel_alpha = detail::apply_kernel(j.at("kernel"), c.kernel);
  if (j.contains("truth")) truth_alpha = detail::apply_truth(j.at("truth"), c.truth);
  if (j.contains("alpha")) {
    c.alpha = get_as<double>(j, "alpha");
    if (!kernel_alpha) c.kernel.alpha = c.alpha;
    if (!truth_alpha) c.truth.alpha = c.alpha;
  }
  if (j.contains("n")) c.n = detail::non_negative<Eigen::Index>(j, "n");
  if (j.contains("m")) c.m = detail::non_negative<Eigen::Index>(j, "m");
  if (j.contains("sigma")) c.sigma = get_as<double>(j, "sigma");
  if (j.contains("auto_length_scale")) c.auto_length_scale = get_as<bool>(j, "auto_length_scale");
  if (j.contains("b_scale")) c.b_scale = get_as<double>(j, "b_scale");
  if (j.contains("kernel") && j.at("kernel").contains("length_scale") &&
      !j.contains("auto_length_scale")) {
    c.auto_length_scale = false;
  }
  if (j.contains("method")) c.method = detail::parse_method(j.at("method"));
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& e : j.at("methods")) c.methods.push_back(detail::parse_method(e));
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("replications")) {
    c.replications = detail::non_negative<std::size_t>(j, "replications");
  }
  if (j.contains("grid_size")) c.grid_size = detail::non_negative<Eigen::Index>(j, "grid_size");
  if (j.contains("band_fraction")) c.band_fraction = get_as<double>(j, "band_fraction");
  if (j.contains("band_level")) c.band_level = get_as<double>(j, "band_level");
  if (j.contains("ns")) c.ns = detail::non_negative_list<Eigen::Index>(j, "ns");
  if (j.contains("reps_per_n")) {
    c.reps_per_n = detail::non_negative_list<std::size_t>(j, "reps_per_n");
  }
  if (j.contains("ms")) c.ms = detail::non_negative_list<Eigen::Index>(j, "ms");
  if (j.contains("j0s")) c.j0s = detail::non_negative_list<Eigen::Index>(j, "j0s");
  if (j.contains("basis_size")) {
    c.basis_size = detail::non_negative<Eigen::Index>(j, "basis_size");
  }
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace vbgp
