#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "gee_reserve/gee.hpp"
#include "gee_reserve/triangle.hpp"

namespace geeres {

enum class MarginalFamily { gamma, lognormal };

std::string to_string(MarginalFamily m);

/// Ground truth for the Monte Carlo generator: the marginals have mean
/// mu_{i,j}(theta) and variance phi h(mu_{i,j}); within-year dependence comes
/// from a Gaussian copula with the given correlation structure.
struct SimSpec {
  int n = 0;
  MeanStructure mean = MeanStructure::chain_ladder;
  Eigen::VectorXd theta;
  double phi = 0.0;
  VarianceFunction variance = VarianceFunction::quadratic();
  CorrelationKind correlation = CorrelationKind::independence;
  Eigen::VectorXd vartheta;
  int m_order = 0;
  MarginalFamily marginal = MarginalFamily::gamma;
  std::uint64_t seed = 0;
};

struct SimulatedTriangle {
  Triangle observed;      // upper-left run-off part
  Eigen::MatrixXd full;   // all n x n cells including the realized future
};

/// One full n x n triangle draw; deterministic given spec.seed.
SimulatedTriangle simulate_triangle(const SimSpec& spec);

struct McSummary {
  SimSpec spec;
  int replications = 0;
  int failures = 0;
  double empirical_mse = 0.0;        // mean (R-hat - R-realized)^2
  double mean_estimated_mse = 0.0;
  double median_estimated_mse = 0.0;
  double mean_reserve_error = 0.0;   // mean (R-hat - R-realized)
  Eigen::VectorXd coverage;          // per-component 95% Wald coverage (sandwich)
  Eigen::VectorXd vartheta_mean;     // mean fitted correlation parameters
};

/// Fit the model implied by `spec` to `replications` simulated observed
/// triangles, predict reserves and compare against the realized future.
/// Per-replication RNG streams are derived from spec.seed + index, so the
/// summary does not depend on thread count. `threads` <= 0 picks a default;
/// the GEE_RESERVE_THREADS environment variable caps it (0 = sequential).
McSummary mc_validate(const SimSpec& spec, int replications, int threads = -1);

// numeric utilities used by the generator (exposed for testing)
double normal_cdf(double z);
double normal_quantile(double u);
double regularized_gamma_p(double a, double x);
double gamma_quantile(double shape, double scale, double u);

}  // namespace geeres
