#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "gee_reserve/correlation.hpp"
#include "gee_reserve/model.hpp"
#include "gee_reserve/triangle.hpp"

namespace geeres {

struct ModelSpec {
  MeanStructure mean = MeanStructure::chain_ladder;
  LinkFunction link{};
  VarianceFunction variance = VarianceFunction::linear();
  CorrelationKind correlation = CorrelationKind::independence;
  int m_order = 0;  // m_dependent only
};

struct FitOptions {
  double tol = 1e-10;   // on the scaled scoring step, see fit()
  int max_iter = 200;
  std::optional<Eigen::VectorXd> theta_init;
};

struct FitResult {
  ModelSpec spec;
  int n = 0;
  Eigen::VectorXd theta;
  double phi = 0.0;
  Eigen::VectorXd vartheta;
  Eigen::MatrixXd cov_sandwich;  // B^-1 S B^-1, symmetrized
  Eigen::MatrixXd cov_model;     // B^-1 at theta-hat
  std::vector<Eigen::VectorXd> fitted;     // mu per cluster
  std::vector<Eigen::VectorXd> residuals;  // Pearson residuals per cluster
  int iterations = 0;
  bool converged = false;
  double score_norm = 0.0;  // max-norm of the quasi-score at theta-hat
  std::vector<std::string> warnings;

  CorrelationStructure correlation_structure() const;
};

/// Quasi-score u(theta) = sum_i D_i' V_i^-1 (X_i - mu_i) with
/// V_i = phi A_i^(1/2) C_i A_i^(1/2).
Eigen::VectorXd quasi_score(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                            double phi, const CorrelationStructure& corr,
                            const VarianceFunction& h);

/// Iterative GEE fit: Fisher-scoring updates of theta alternating with moment
/// re-estimation of (phi, vartheta). Stops when the max-norm of the step falls
/// below tol * (1 + max|theta|) or after max_iter iterations; a non-converged
/// result is returned rather than thrown.
FitResult fit(const ClusterSet& clusters, const ModelSpec& spec, const FitOptions& options = {});

/// Robust covariance B^-1 S B^-1 recomputed from scratch at the given state.
Eigen::MatrixXd sandwich_cov(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                             double phi, const CorrelationStructure& corr,
                             const VarianceFunction& h);
Eigen::MatrixXd sandwich_cov(const ClusterSet& clusters, const FitResult& fit);

/// Model-based covariance B^-1 at the given state.
Eigen::MatrixXd model_based_cov(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                                double phi, const CorrelationStructure& corr,
                                const VarianceFunction& h);
Eigen::MatrixXd model_based_cov(const ClusterSet& clusters, const FitResult& fit);

}  // namespace geeres
