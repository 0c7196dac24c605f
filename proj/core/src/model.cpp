#include "gee_reserve/model.hpp"

#include <cmath>

namespace geeres {

std::string to_string(MeanStructure m) {
  return m == MeanStructure::chain_ladder ? "chain-ladder" : "hoerl";
}

std::string to_string(LinkKind) { return "log"; }

std::string to_string(VarianceKind k) {
  switch (k) {
    case VarianceKind::linear: return "linear";
    case VarianceKind::quadratic: return "quadratic";
    case VarianceKind::power: return "power";
  }
  return "?";
}

DesignBuilder::DesignBuilder(MeanStructure structure, int n)
    : structure_(structure), n_(n) {
  if (n < 1) throw IndexOutOfRangeError("design needs n >= 1");
  p_ = structure == MeanStructure::chain_ladder ? 2 * n - 1 : 3 * n - 2;
}

Eigen::RowVectorXd DesignBuilder::row(int i, int j) const {
  if (i < 1 || i > n_ || j < 1 || j > n_)
    throw IndexOutOfRangeError("design row (" + std::to_string(i) + "," +
                               std::to_string(j) + ") outside 1.." + std::to_string(n_));
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(p_);
  z(0) = 1.0;
  if (i >= 2) z(i - 1) = 1.0;
  if (structure_ == MeanStructure::chain_ladder) {
    if (j >= 2) z(n_ - 1 + j - 1) = 1.0;
  } else {
    if (j >= 2) {
      z(n_ - 1 + j - 1) = static_cast<double>(j);          // j * delta_{j}
      z(2 * n_ - 2 + j - 1) = std::log(static_cast<double>(j));  // log(j) * delta_{j}
    }
  }
  return z;
}

Eigen::MatrixXd DesignBuilder::rows(std::span<const Cell> cells) const {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(cells.size()), p_);
  for (std::size_t k = 0; k < cells.size(); ++k) Z.row(static_cast<Eigen::Index>(k)) = row(cells[k].i, cells[k].j);
  return Z;
}

double LinkFunction::operator()(double mu) const { return std::log(mu); }
double LinkFunction::inverse(double eta) const { return std::exp(eta); }
double LinkFunction::inverse_derivative(double eta) const { return std::exp(eta); }

VarianceFunction VarianceFunction::power(double exponent) {
  if (!(exponent > 1.0 && exponent < 2.0))
    throw std::invalid_argument("power variance exponent must lie in (1, 2)");
  return VarianceFunction(VarianceKind::power, exponent);
}

double VarianceFunction::operator()(double mu) const {
  switch (kind_) {
    case VarianceKind::linear: return mu;
    case VarianceKind::quadratic: return mu * mu;
    case VarianceKind::power: return std::pow(mu, exponent_);
  }
  return mu;
}

Eigen::VectorXd mean_values(const DesignBuilder& builder, const LinkFunction& link,
                            const Eigen::VectorXd& theta, std::span<const Cell> cells) {
  if (theta.size() != builder.param_count())
    throw DimensionMismatchError("theta has length " + std::to_string(theta.size()) +
                                 ", design expects " + std::to_string(builder.param_count()));
  Eigen::VectorXd mu(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double eta = builder.row(cells[k].i, cells[k].j).dot(theta);
    mu(static_cast<Eigen::Index>(k)) = link.inverse(eta);
  }
  return mu;
}

Eigen::MatrixXd mean_jacobian(const DesignBuilder& builder, const LinkFunction& link,
                              const Eigen::VectorXd& theta, std::span<const Cell> cells) {
  if (theta.size() != builder.param_count())
    throw DimensionMismatchError("theta has length " + std::to_string(theta.size()) +
                                 ", design expects " + std::to_string(builder.param_count()));
  Eigen::MatrixXd D(static_cast<Eigen::Index>(cells.size()), builder.param_count());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Eigen::RowVectorXd z = builder.row(cells[k].i, cells[k].j);
    const double eta = z.dot(theta);
    D.row(static_cast<Eigen::Index>(k)) = link.inverse_derivative(eta) * z;
  }
  return D;
}

}  // namespace geeres
