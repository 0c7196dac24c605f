#include "gee_reserve/prediction.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace geeres {

const FutureCells::Year& FutureCells::year(int i) const {
  for (const auto& y : years)
    if (y.accident_year == i) return y;
  throw IndexOutOfRangeError("no future cells for accident year " + std::to_string(i));
}

FutureCells predict_future(const FitResult& fit, const DesignBuilder& builder, bool force) {
  if (!fit.converged && !force)
    throw NotConvergedError("refusing to predict from a non-converged fit");
  if (builder.n() != fit.n || builder.param_count() != fit.theta.size())
    throw DimensionMismatchError("design does not match the fitted model");
  const int n = fit.n;
  FutureCells out;
  for (int i = 2; i <= n; ++i) {
    FutureCells::Year year;
    year.accident_year = i;
    std::vector<Cell> cells;
    for (int j = n + 2 - i; j <= n; ++j) {
      year.dev_years.push_back(j);
      cells.push_back({i, j});
    }
    year.mean = mean_values(builder, fit.spec.link, fit.theta, cells);
    year.jacobian = mean_jacobian(builder, fit.spec.link, fit.theta, cells);
    out.years.push_back(std::move(year));
  }
  return out;
}

ExtendedCorrelation extend_correlation(const CorrelationStructure& structure, int n, int i) {
  if (!structure.translation_symmetric())
    throw UnsupportedStructureForPredictionError(
        "unstructured working correlation does not extend to unobserved development years");
  if (i < 2 || i > n) throw IndexOutOfRangeError("accident year must lie in 2..n");
  if (structure.max_size() < n)
    throw DimensionMismatchError("correlation structure too small for full development");
  ExtendedCorrelation ext;
  ext.full = structure.working_matrix(n);
  const int past = n + 1 - i;   // observed cells of accident year i
  const int future = i - 1;
  ext.future_past = ext.full.block(past, 0, future, past);
  ext.future_future = ext.full.block(past, past, future, future);
  return ext;
}

MseEstimate mse_prediction(const ClusterSet& clusters, const FitResult& fit,
                           const FutureCells& future) {
  const int n = fit.n;
  if (static_cast<int>(future.years.size()) != n - 1)
    throw DimensionMismatchError("future cells do not match the fitted triangle");

  const CorrelationStructure structure = fit.correlation_structure();
  const VarianceFunction& h = fit.spec.variance;

  MseEstimate est;
  est.per_year = Eigen::VectorXd::Zero(std::max(0, n - 1));
  est.total = 0.0;
  if (n < 2) return est;

  for (int i = 2; i <= n; ++i) {
    const auto& year = future.year(i);
    const auto& cluster = clusters.clusters[static_cast<std::size_t>(i - 1)];
    const Eigen::Index past = cluster.values.size();
    const Eigen::Index fut = year.mean.size();
    if (past != n + 1 - i || fut != i - 1)
      throw DimensionMismatchError("cluster/future sizes inconsistent for year " +
                                   std::to_string(i));

    // past-cell quantities at theta-hat
    Eigen::VectorXd mu(past), sd(past);
    for (Eigen::Index t = 0; t < past; ++t) {
      mu(t) = fit.fitted[static_cast<std::size_t>(i - 1)](t);
      sd(t) = std::sqrt(h(mu(t)));
    }
    const Eigen::MatrixXd D = mu.asDiagonal() * cluster.design;
    Eigen::MatrixXd V = structure.working_matrix(static_cast<int>(past));
    V = fit.phi * sd.asDiagonal() * V * sd.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
    if (!lu.isInvertible())
      throw SingularWorkingCovarianceError("working covariance of cluster " +
                                           std::to_string(i) + " is singular");
    const Eigen::MatrixXd Vinv = lu.inverse();

    Eigen::VectorXd sd_fut(fut);
    for (Eigen::Index t = 0; t < fut; ++t) sd_fut(t) = std::sqrt(h(year.mean(t)));

    const ExtendedCorrelation ext = extend_correlation(structure, n, i);
    const Eigen::MatrixXd H = year.jacobian * fit.cov_model * D.transpose() * Vinv;

    const Eigen::MatrixXd process =
        fit.phi * sd_fut.asDiagonal() * ext.future_future * sd_fut.asDiagonal();
    const Eigen::MatrixXd cross =
        2.0 * fit.phi *
        (sd_fut.asDiagonal() * ext.future_past * sd.asDiagonal() * H.transpose());
    const Eigen::MatrixXd estimation = year.jacobian * fit.cov_sandwich * year.jacobian.transpose();

    const Eigen::MatrixXd M = process - cross + estimation;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(fut);
    const double mse_i = ones.dot(M * ones);
    est.per_year(i - 2) = mse_i;
    est.total += mse_i;
    if (mse_i <= 0.0)
      est.warnings.push_back("estimated MSE for accident year " + std::to_string(i) +
                             " is not positive (" + std::to_string(mse_i) + ")");
  }
  return est;
}

ReserveReport reserve_report(const FitResult& fit, const FutureCells& future,
                             const MseEstimate& mse, const CriteriaReport& criteria) {
  const int n = fit.n;
  if (static_cast<int>(future.years.size()) != std::max(0, n - 1) ||
      mse.per_year.size() != std::max(0, n - 1))
    throw DimensionMismatchError("inconsistent prediction inputs");

  ReserveReport report;
  report.spec = fit.spec;
  report.n = n;
  report.converged = fit.converged;
  report.iterations = fit.iterations;
  report.score_norm = fit.score_norm;
  report.theta = fit.theta;
  report.phi = fit.phi;
  report.vartheta = fit.vartheta;
  report.criteria = criteria;
  report.warnings = fit.warnings;
  for (const auto& w : mse.warnings) report.warnings.push_back(w);

  report.rows.push_back({1, 0.0, 0.0, 0.0});
  for (int i = 2; i <= n; ++i) {
    ReserveRow row;
    row.accident_year = i;
    row.reserve = future.year(i).mean.sum();
    row.mse = mse.per_year(i - 2);
    row.rmse_pct = row.reserve > 0.0 && row.mse >= 0.0
                       ? 100.0 * std::sqrt(row.mse) / row.reserve
                       : std::numeric_limits<double>::quiet_NaN();
    report.total_reserve += row.reserve;
    report.total_mse += row.mse;
    report.rows.push_back(row);
  }
  if (n < 2) {
    report.total_rmse_pct = 0.0;
    return report;
  }
  report.total_rmse_pct = report.total_reserve > 0.0 && report.total_mse >= 0.0
                              ? 100.0 * std::sqrt(report.total_mse) / report.total_reserve
                              : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace geeres
