#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "gee_reserve/gee.hpp"
#include "gee_reserve/selection.hpp"

namespace geeres {

/// Plug-in predictions of the unobserved cells, one block per accident year
/// i = 2..n covering development years n+2-i .. n.
struct FutureCells {
  struct Year {
    int accident_year = 0;
    std::vector<int> dev_years;
    Eigen::VectorXd mean;      // predicted cells, length i-1
    Eigen::MatrixXd jacobian;  // (i-1) x p rows d mu / d theta
  };
  std::vector<Year> years;  // index 0 holds accident year 2

  const Year& year(int i) const;
};

/// Future cell predictions from a converged fit; a non-converged fit is
/// rejected with NotConvergedError unless `force` is set.
FutureCells predict_future(const FitResult& fit, const DesignBuilder& builder,
                           bool force = false);

/// The full-development correlation matrix for accident year i and its blocks:
/// past-past (C_i), future-past (Cbar_i) and future-future (Cvec_i).
struct ExtendedCorrelation {
  Eigen::MatrixXd full;         // n x n
  Eigen::MatrixXd future_past;  // (i-1) x (n+1-i)
  Eigen::MatrixXd future_future;  // (i-1) x (i-1)
};

/// Extension to unobserved development years for translation-symmetric
/// structures; unstructured is rejected with
/// UnsupportedStructureForPredictionError.
ExtendedCorrelation extend_correlation(const CorrelationStructure& structure, int n, int i);

struct MseEstimate {
  Eigen::VectorXd per_year;  // index 0 holds accident year 2
  double total = 0.0;
  std::vector<std::string> warnings;
};

/// Mean square error of prediction per accident year and in total:
///   MSE_i = 1' [ phi Af^(1/2) Cvec Af^(1/2)
///                - 2 phi Af^(1/2) Cbar A^(1/2) H_ii'
///                + Df Sigma Df' ] 1,
/// with H_ii = Df B^-1 D_i' V_i^-1 and Sigma the sandwich covariance.
/// Negative values are reported as-is with a warning.
MseEstimate mse_prediction(const ClusterSet& clusters, const FitResult& fit,
                           const FutureCells& future);

struct ReserveRow {
  int accident_year = 0;
  double reserve = 0.0;
  double mse = 0.0;
  double rmse_pct = 0.0;  // 100 sqrt(mse) / reserve
};

struct ReserveReport {
  ModelSpec spec;
  int n = 0;
  bool converged = true;
  int iterations = 0;
  double score_norm = 0.0;
  Eigen::VectorXd theta;
  double phi = 0.0;
  Eigen::VectorXd vartheta;
  std::vector<ReserveRow> rows;  // accident years 1..n, year 1 has zero reserve
  double total_reserve = 0.0;
  double total_mse = 0.0;
  double total_rmse_pct = 0.0;
  CriteriaReport criteria;
  std::vector<std::string> warnings;
};

ReserveReport reserve_report(const FitResult& fit, const FutureCells& future,
                             const MseEstimate& mse, const CriteriaReport& criteria);

}  // namespace geeres
