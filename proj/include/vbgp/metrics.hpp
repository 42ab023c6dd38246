#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "vbgp/error.hpp"
#include "vbgp/gp_core.hpp"
#include "vbgp/quadrature.hpp"

namespace vbgp {

namespace detail {

inline Eigen::VectorXd values_at(const RegressionFunction& f, const Points& nodes) {
  Eigen::VectorXd v(nodes.rows());
  for (Eigen::Index k = 0; k < nodes.rows(); ++k) v(k) = f(nodes.row(k));
  return v;
}

inline void check_sizes(const QuadratureRule& rule, Eigen::Index a, Eigen::Index b) {
  if (a != rule.size() || b != rule.size()) {
    throw ConfigError("metrics: values do not match the quadrature nodes");
  }
}

}  // namespace detail

/// Hellinger distance between the observation laws of two regression
/// functions under noise level sigma, from their values at the rule's nodes:
///   d_H^2 = int 1 - exp(-(f1 - f2)^2 / (8 sigma^2)) dG.
inline double hellinger(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2,
                        double sigma, const QuadratureRule& rule) {
  detail::check_sizes(rule, f1.size(), f2.size());
  if (!(sigma > 0.0)) throw DomainError("hellinger: sigma must be positive");
  const Eigen::ArrayXd diff = (f1 - f2).array();
  const Eigen::ArrayXd integrand = -(-diff.square() / (8.0 * sigma * sigma)).expm1();
  const double h2 = (rule.weights.array() * integrand).sum();
  return std::sqrt(std::clamp(h2, 0.0, 1.0));
}

inline double hellinger(const RegressionFunction& f1, const RegressionFunction& f2,
                        double sigma, const QuadratureRule& rule) {
  return hellinger(detail::values_at(f1, rule.nodes),
                   detail::values_at(f2, rule.nodes), sigma, rule);
}

/// ||f1 - f2||_{2,G}.
inline double l2_distance(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2,
                          const QuadratureRule& rule) {
  detail::check_sizes(rule, f1.size(), f2.size());
  return std::sqrt((rule.weights.array() * (f1 - f2).array().square()).sum());
}

inline double l2_distance(const RegressionFunction& f1,
                          const RegressionFunction& f2,
                          const QuadratureRule& rule) {
  return l2_distance(detail::values_at(f1, rule.nodes),
                     detail::values_at(f2, rule.nodes), rule);
}

/// max_k |f1 - f2| over the given values.
inline double sup_distance(const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
  if (f1.size() != f2.size() || f1.size() == 0) {
    throw ConfigError("sup_distance: size mismatch");
  }
  return (f1 - f2).cwiseAbs().maxCoeff();
}

struct BandSummary {
  double coverage = 0.0;
  double mean_width = 0.0;
};

/// Fraction of points where the truth lies inside the band, and the average
/// band width. `truth` holds f0 at the band's grid points.
inline BandSummary band_summary(const CredibleBand& band,
                                const Eigen::VectorXd& truth) {
  if (band.size() != truth.size() || truth.size() == 0) {
    throw ConfigError("band_summary: band and truth sizes differ");
  }
  Eigen::Index inside = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (truth(i) >= band.lower(i) && truth(i) <= band.upper(i)) ++inside;
  }
  return {static_cast<double>(inside) / static_cast<double>(truth.size()),
          (band.upper - band.lower).mean()};
}

inline BandSummary band_summary(const CredibleBand& band,
                                const RegressionFunction& truth,
                                const Points& grid) {
  if (grid.rows() != band.size()) {
    throw ConfigError("band_summary: grid does not match band");
  }
  return band_summary(band, detail::values_at(truth, grid));
}

}  // namespace vbgp
