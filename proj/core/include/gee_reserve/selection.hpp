#pragma once

#include <Eigen/Core>
#include <vector>

#include "gee_reserve/gee.hpp"

namespace geeres {

struct CriteriaReport {
  double q_indep = 0.0;  // quasi-likelihood under working independence at theta-hat
  double qic = 0.0;
  double qic_hh = 0.0;
  double cic = 0.0;
  double cic_hh = 0.0;
};

/// Unscaled quasi-likelihood under working independence:
///   linear    q(x; mu) = x log mu - mu
///   quadratic q(x; mu) = -(x / mu + log mu)
///   power q   q(x; mu) = mu^(1-q) (x / (1-q) - mu / (2-q))
double quasi_likelihood_indep(const ClusterSet& clusters,
                              const std::vector<Eigen::VectorXd>& fitted,
                              const VarianceFunction& h);

/// Quasi-information of the independence model at the given state:
/// Omega = sum_i D_i' A_i^-1 D_i / phi (the inverse of the independence
/// model-based covariance).
Eigen::MatrixXd omega_independence(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                                   double phi, const VarianceFunction& h);
Eigen::MatrixXd omega_independence(const ClusterSet& clusters, const FitResult& fit);

/// QIC / QIC_HH / CIC / CIC_HH for `fit`, with the HH variants evaluating the
/// trace term at the independence estimate carried by `fit_indep`. Both fits
/// must share mean structure, link and variance function, and `fit_indep`
/// must use the independence working correlation.
CriteriaReport criteria(const ClusterSet& clusters, const FitResult& fit,
                        const FitResult& fit_indep);

}  // namespace geeres
