#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "gee_reserve/errors.hpp"
#include "gee_reserve/triangle.hpp"

namespace geeres {

/// Mean structures on the log scale.
///   chain_ladder: log mu = gamma + alpha_i + beta_j,          p = 2n-1
///   hoerl:        log mu = gamma + alpha_i + j beta_j + lambda_j log j,  p = 3n-2
/// Corner constraints alpha_1 = beta_1 (= lambda_1) = 0 are encoded by
/// omitting the columns, never by explicit zeros.
enum class MeanStructure { chain_ladder, hoerl };

std::string to_string(MeanStructure m);

class DesignBuilder {
 public:
  DesignBuilder(MeanStructure structure, int n);

  MeanStructure structure() const { return structure_; }
  int n() const { return n_; }
  int param_count() const { return p_; }

  /// Covariate row z_{i,j}; throws IndexOutOfRangeError unless 1 <= i,j <= n.
  Eigen::RowVectorXd row(int i, int j) const;

  /// Stacked covariate rows for a cell list.
  Eigen::MatrixXd rows(std::span<const Cell> cells) const;

 private:
  MeanStructure structure_;
  int n_;
  int p_;
};

enum class LinkKind { log_link };

class LinkFunction {
 public:
  constexpr LinkFunction() : kind_(LinkKind::log_link) {}

  LinkKind kind() const { return kind_; }
  double operator()(double mu) const;         // g
  double inverse(double eta) const;           // g^-1
  double inverse_derivative(double eta) const;  // d mu / d eta

 private:
  LinkKind kind_;
};

std::string to_string(LinkKind k);

enum class VarianceKind { linear, quadratic, power };

std::string to_string(VarianceKind k);

/// Variance function h with Var X = phi * h(mu).
class VarianceFunction {
 public:
  static VarianceFunction linear() { return VarianceFunction(VarianceKind::linear, 1.0); }
  static VarianceFunction quadratic() { return VarianceFunction(VarianceKind::quadratic, 2.0); }
  /// Tweedie-style power variance, exponent restricted to (1, 2).
  static VarianceFunction power(double exponent);

  VarianceKind kind() const { return kind_; }
  double exponent() const { return exponent_; }
  double operator()(double mu) const;

  friend bool operator==(const VarianceFunction&, const VarianceFunction&) = default;

 private:
  VarianceFunction(VarianceKind kind, double exponent) : kind_(kind), exponent_(exponent) {}
  VarianceKind kind_;
  double exponent_;
};

/// Fitted means mu_{i,j} = g^{-1}(z_{i,j}' theta) for the given cells.
Eigen::VectorXd mean_values(const DesignBuilder& builder, const LinkFunction& link,
                            const Eigen::VectorXd& theta, std::span<const Cell> cells);

/// Jacobian D with rows d mu_{i,j} / d theta (= mu_{i,j} * z_{i,j} under log link).
Eigen::MatrixXd mean_jacobian(const DesignBuilder& builder, const LinkFunction& link,
                              const Eigen::VectorXd& theta, std::span<const Cell> cells);

}  // namespace geeres
