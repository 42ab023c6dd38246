// Fits the exact and the variational posterior to one simulated Matern
// dataset and prints the KL divergence and the L2 error of both means.

#include <iostream>

#include "vbgp/vbgp.hpp"

int main() {
  using namespace vbgp;
  ExperimentConfig config = ExperimentConfig::defaults(ExperimentKind::MaternMethod1);
  config.n = 1000;
  config.m = 20;
  config.seed = 7;

  const KernelSpec spec = config.kernel_at(config.n);
  const Dataset data = simulate(config, 0);
  auto gram = std::make_shared<const Eigen::MatrixXd>(gram_matrix(spec, data.xs));

  const InducingSet ind = inducing_method1(gram, config.m, data.xs);
  const VariationalParams params = optimal_variational_params(ind, data);

  const QuadratureRule rule = gauss_legendre_unit();
  Eigen::VectorXd f0(rule.size());
  for (Eigen::Index k = 0; k < rule.size(); ++k) f0(k) = data.truth(rule.nodes.row(k));

  const GaussianPredictive exact = exact_posterior(data, spec, rule.nodes, false, gram.get());
  const GaussianPredictive approx = variational_predictive(ind, params, spec, rule.nodes, false);

  std::cout << "n = " << config.n << ", m = " << config.m << '\n'
            << "KL(variational || posterior) = " << kl_variational_to_posterior(ind, data) << '\n'
            << "L2 error, exact mean       = " << l2_distance(exact.mean, f0, rule) << '\n'
            << "L2 error, variational mean = " << l2_distance(approx.mean, f0, rule) << '\n';
}
