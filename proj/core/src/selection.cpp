#include "gee_reserve/selection.hpp"

#include <cmath>
#include <limits>

namespace geeres {

double quasi_likelihood_indep(const ClusterSet& clusters,
                              const std::vector<Eigen::VectorXd>& fitted,
                              const VarianceFunction& h) {
  if (fitted.size() != clusters.clusters.size())
    throw DimensionMismatchError("fitted values do not match the cluster count");
  double q = 0.0;
  for (std::size_t c = 0; c < fitted.size(); ++c) {
    const auto& x = clusters.clusters[c].values;
    const auto& mu = fitted[c];
    if (mu.size() != x.size())
      throw DimensionMismatchError("fitted values do not match cluster size");
    for (Eigen::Index t = 0; t < x.size(); ++t) {
      if (!(mu(t) > 0.0)) throw NonPositiveMeanError("quasi-likelihood needs mu > 0");
      switch (h.kind()) {
        case VarianceKind::linear:
          q += x(t) * std::log(mu(t)) - mu(t);
          break;
        case VarianceKind::quadratic:
          q += -(x(t) / mu(t) + std::log(mu(t)));
          break;
        case VarianceKind::power: {
          const double e = h.exponent();
          q += std::pow(mu(t), 1.0 - e) * (x(t) / (1.0 - e) - mu(t) / (2.0 - e));
          break;
        }
      }
    }
  }
  return q;
}

Eigen::MatrixXd omega_independence(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                                   double phi, const VarianceFunction& h) {
  if (theta.size() != clusters.p)
    throw DimensionMismatchError("theta has the wrong length");
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(clusters.p, clusters.p);
  for (const auto& c : clusters.clusters) {
    const Eigen::VectorXd eta = c.design * theta;
    for (Eigen::Index t = 0; t < c.values.size(); ++t) {
      const double mu = std::exp(eta(t));
      // D'A^-1 D row contribution: (mu z)' (mu z) / h(mu)
      omega += (mu * mu / h(mu)) * c.design.row(t).transpose() * c.design.row(t);
    }
  }
  if (!(phi > 0.0)) return Eigen::MatrixXd::Constant(clusters.p, clusters.p,
                                                     std::numeric_limits<double>::quiet_NaN());
  omega /= phi;
  return 0.5 * (omega + omega.transpose());
}

Eigen::MatrixXd omega_independence(const ClusterSet& clusters, const FitResult& fit) {
  return omega_independence(clusters, fit.theta, fit.phi, fit.spec.variance);
}

CriteriaReport criteria(const ClusterSet& clusters, const FitResult& fit,
                        const FitResult& fit_indep) {
  if (fit_indep.spec.correlation != CorrelationKind::independence)
    throw MismatchedModelsError("the reference fit must use the independence structure");
  if (fit.spec.mean != fit_indep.spec.mean || !(fit.spec.variance == fit_indep.spec.variance) ||
      fit.spec.link.kind() != fit_indep.spec.link.kind() || fit.n != fit_indep.n)
    throw MismatchedModelsError("criteria need fits of the same mean/link/variance model");

  CriteriaReport report;
  report.q_indep = quasi_likelihood_indep(clusters, fit.fitted, fit.spec.variance);
  const Eigen::MatrixXd omega_own = omega_independence(clusters, fit);
  const Eigen::MatrixXd omega_ref = omega_independence(clusters, fit_indep);
  report.cic = (omega_own * fit.cov_sandwich).trace();
  report.cic_hh = (omega_ref * fit.cov_sandwich).trace();
  report.qic = -2.0 * report.q_indep + 2.0 * report.cic;
  report.qic_hh = -2.0 * report.q_indep + 2.0 * report.cic_hh;
  return report;
}

}  // namespace geeres
