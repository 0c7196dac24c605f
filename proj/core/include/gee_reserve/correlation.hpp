#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "gee_reserve/errors.hpp"
#include "gee_reserve/model.hpp"

namespace geeres {

enum class CorrelationKind { independence, exchangeable, ar1, m_dependent, unstructured };

std::string to_string(CorrelationKind k);

/// Working correlation structure with its parameter vector.
///
/// matrix() validates positive definiteness (smallest eigenvalue must exceed
/// 1e-10). working_matrix() only requires the result to be invertible: the
/// solver follows the usual GEE software semantics where moment estimates may
/// leave the positive definite region at the larger cluster sizes.
class CorrelationStructure {
 public:
  static CorrelationStructure independence(int max_size);
  static CorrelationStructure exchangeable(int max_size, double rho);
  static CorrelationStructure ar1(int max_size, double rho);
  static CorrelationStructure m_dependent(int max_size, Eigen::VectorXd lag_rhos);
  /// `packed` holds the strict upper triangle row-wise: (1,2),(1,3),..,(n-1,n).
  static CorrelationStructure unstructured(int max_size, Eigen::VectorXd packed);

  CorrelationKind kind() const { return kind_; }
  int max_size() const { return max_size_; }
  int order() const { return order_; }  // m for m_dependent, else 0
  const Eigen::VectorXd& params() const { return params_; }
  int param_count() const { return static_cast<int>(params_.size()); }

  /// True when the structure extends to unobserved development years by
  /// translation (everything except unstructured).
  bool translation_symmetric() const { return kind_ != CorrelationKind::unstructured; }

  CorrelationStructure with_params(Eigen::VectorXd params) const;

  /// k x k correlation matrix, positive-definiteness validated.
  Eigen::MatrixXd matrix(int k) const;
  /// k x k correlation matrix without the PD check (solver path).
  Eigen::MatrixXd working_matrix(int k) const;

  /// Index of pair (j, k), 1 <= j < k <= max_size, into the packed vector.
  int packed_index(int j, int k) const;

 private:
  CorrelationStructure(CorrelationKind kind, int max_size, int order, Eigen::VectorXd params);

  Eigen::MatrixXd build(int k) const;

  CorrelationKind kind_;
  int max_size_;
  int order_;
  Eigen::VectorXd params_;
};

/// Pearson residuals r = (x - mu) / sqrt(h(mu)), cluster by cluster.
std::vector<Eigen::VectorXd> pearson_residuals(const ClusterSet& clusters,
                                               const std::vector<Eigen::VectorXd>& fitted,
                                               const VarianceFunction& h);

struct DispersionEstimate {
  double phi = 0.0;
  int denominator = 0;   // N, the total observation count
  bool degenerate = false;  // phi == 0 (interpolating fit) or N <= p
};

/// Moment estimate phi = sum r^2 / N.
DispersionEstimate estimate_dispersion(const std::vector<Eigen::VectorXd>& residuals, int p);

struct CorrelationEstimate {
  Eigen::VectorXd params;
  std::vector<std::string> warnings;
};

/// Moment / estimating-equation estimates of the correlation parameters from
/// Pearson residuals. Estimates are clipped to [-0.99, 0.99]; exchangeable
/// estimates are additionally nudged off cluster-size singular points.
CorrelationEstimate estimate_params(const std::vector<Eigen::VectorXd>& residuals,
                                    CorrelationKind kind, int m_order, double phi);

}  // namespace geeres
