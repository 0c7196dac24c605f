#include "gee_reserve/gee.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace geeres {

namespace {

constexpr double kConditionLimit = 1e12;

struct ClusterWork {
  Eigen::VectorXd mu;
  Eigen::MatrixXd D;
  Eigen::MatrixXd Vinv;  // inverse working covariance
  Eigen::VectorXd resid_raw;  // x - mu
};

Eigen::MatrixXd invert_working(const Eigen::MatrixXd& V, int cluster) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible())
    throw SingularWorkingCovarianceError("working covariance of cluster " +
                                         std::to_string(cluster) + " is singular");
  return lu.inverse();
}

/// Per-cluster quantities at (theta, phi, C(vartheta)).
std::vector<ClusterWork> assemble(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                                  double phi, const CorrelationStructure& corr,
                                  const VarianceFunction& h) {
  std::vector<ClusterWork> work;
  work.reserve(clusters.clusters.size());
  for (const auto& c : clusters.clusters) {
    ClusterWork w;
    const Eigen::VectorXd eta = c.design * theta;
    const Eigen::Index ni = c.values.size();
    w.mu.resize(ni);
    Eigen::VectorXd sd(ni);
    for (Eigen::Index t = 0; t < ni; ++t) {
      w.mu(t) = std::exp(eta(t));
      sd(t) = std::sqrt(h(w.mu(t)));
    }
    if (!w.mu.allFinite()) throw DivergedFitError("fitted mean overflowed");
    w.D = w.mu.asDiagonal() * c.design;
    Eigen::MatrixXd V = corr.working_matrix(static_cast<int>(ni));
    V = phi * sd.asDiagonal() * V * sd.asDiagonal();
    w.Vinv = invert_working(V, c.accident_year);
    w.resid_raw = c.values - w.mu;
    work.push_back(std::move(w));
  }
  return work;
}

Eigen::VectorXd score_from(const std::vector<ClusterWork>& work, int p) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  for (const auto& w : work) u += w.D.transpose() * (w.Vinv * w.resid_raw);
  return u;
}

Eigen::MatrixXd b_from(const std::vector<ClusterWork>& work, int p) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);
  for (const auto& w : work) B += w.D.transpose() * w.Vinv * w.D;
  return B;
}

Eigen::MatrixXd s_from(const std::vector<ClusterWork>& work, int p) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  for (const auto& w : work) {
    const Eigen::VectorXd g = w.D.transpose() * (w.Vinv * w.resid_raw);
    S += g * g.transpose();
  }
  return S;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

/// Rank-revealing solve with a condition estimate from the QR diagonal.
Eigen::MatrixXd solve_b(const Eigen::MatrixXd& B, const Eigen::MatrixXd& rhs) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  const Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs();
  const double dmax = diag.maxCoeff();
  const double dmin = diag.minCoeff();
  if (!(dmin > 0.0) || dmax / dmin > kConditionLimit)
    throw SingularBError("B is singular or nearly singular (condition estimate " +
                         std::to_string(dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity()) + ")");
  return qr.solve(rhs);
}

Eigen::VectorXd ols_log_start(const ClusterSet& clusters) {
  int n_obs = clusters.total_observations();
  Eigen::MatrixXd Z(n_obs, clusters.p);
  Eigen::VectorXd y(n_obs);
  double mean_abs = 0.0;
  int row = 0;
  for (const auto& c : clusters.clusters) {
    for (Eigen::Index t = 0; t < c.values.size(); ++t) mean_abs += std::abs(c.values(t));
  }
  mean_abs /= std::max(1, n_obs);
  const double floor = std::max(1e-3 * mean_abs, 1e-12);
  for (const auto& c : clusters.clusters) {
    for (Eigen::Index t = 0; t < c.values.size(); ++t, ++row) {
      Z.row(row) = c.design.row(t);
      y(row) = std::log(std::max(c.values(t), floor));
    }
  }
  return Z.colPivHouseholderQr().solve(y);
}

std::vector<Eigen::VectorXd> pearson_from(const std::vector<ClusterWork>& work,
                                          const VarianceFunction& h) {
  std::vector<Eigen::VectorXd> res;
  res.reserve(work.size());
  for (const auto& w : work) {
    Eigen::VectorXd r(w.mu.size());
    for (Eigen::Index t = 0; t < w.mu.size(); ++t)
      r(t) = w.resid_raw(t) / std::sqrt(h(w.mu(t)));
    res.push_back(std::move(r));
  }
  return res;
}

void merge_warnings(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const auto& w : from)
    if (std::find(into.begin(), into.end(), w) == into.end()) into.push_back(w);
}

}  // namespace

CorrelationStructure FitResult::correlation_structure() const {
  CorrelationStructure base = [&] {
    switch (spec.correlation) {
      case CorrelationKind::independence: return CorrelationStructure::independence(n);
      case CorrelationKind::exchangeable: return CorrelationStructure::exchangeable(n, 0.0);
      case CorrelationKind::ar1: return CorrelationStructure::ar1(n, 0.0);
      case CorrelationKind::m_dependent:
        return CorrelationStructure::m_dependent(n, Eigen::VectorXd::Zero(spec.m_order));
      case CorrelationKind::unstructured:
        return CorrelationStructure::unstructured(
            n, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * (n - 1) / 2));
    }
    throw Error("unreachable");
  }();
  if (vartheta.size() == 0) return base;
  return base.with_params(vartheta);
}

Eigen::VectorXd quasi_score(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                            double phi, const CorrelationStructure& corr,
                            const VarianceFunction& h) {
  const auto work = assemble(clusters, theta, phi, corr, h);
  return score_from(work, clusters.p);
}

FitResult fit(const ClusterSet& clusters, const ModelSpec& spec, const FitOptions& options) {
  const int p = clusters.p;
  const int n_obs = clusters.total_observations();
  if (n_obs == 0) throw DegenerateFitError("no observations");

  FitResult result;
  result.spec = spec;
  result.n = clusters.n;

  Eigen::VectorXd theta;
  if (options.theta_init) {
    if (options.theta_init->size() != p)
      throw DimensionMismatchError("theta_init has the wrong length");
    theta = *options.theta_init;
  } else if (spec.correlation != CorrelationKind::independence) {
    ModelSpec indep = spec;
    indep.correlation = CorrelationKind::independence;
    indep.m_order = 0;
    FitOptions inner = options;
    inner.theta_init.reset();
    theta = fit(clusters, indep, inner).theta;
  } else {
    theta = ols_log_start(clusters);
  }

  CorrelationStructure structure = [&] {
    switch (spec.correlation) {
      case CorrelationKind::independence: return CorrelationStructure::independence(clusters.n);
      case CorrelationKind::exchangeable: return CorrelationStructure::exchangeable(clusters.n, 0.0);
      case CorrelationKind::ar1: return CorrelationStructure::ar1(clusters.n, 0.0);
      case CorrelationKind::m_dependent:
        return CorrelationStructure::m_dependent(clusters.n,
                                                 Eigen::VectorXd::Zero(spec.m_order));
      case CorrelationKind::unstructured:
        return CorrelationStructure::unstructured(
            clusters.n,
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(clusters.n) * (clusters.n - 1) / 2));
    }
    throw Error("unreachable");
  }();

  double phi = 0.0;
  bool interpolating = false;
  result.converged = false;

  for (int it = 1; it <= options.max_iter; ++it) {
    result.iterations = it;

    // moment re-estimation of (phi, vartheta) at the current theta
    {
      const auto work_plain = assemble(clusters, theta, 1.0,
                                       CorrelationStructure::independence(clusters.n),
                                       spec.variance);
      const auto residuals = pearson_from(work_plain, spec.variance);
      const auto disp = estimate_dispersion(residuals, p);
      phi = disp.phi;
      if (phi < 1e-24) {  // interpolation up to floating rounding
        interpolating = true;
        result.warnings.push_back("fit interpolates the data exactly; dispersion is zero");
        result.converged = true;
        break;
      }
      auto est = estimate_params(residuals, spec.correlation, spec.m_order, phi);
      merge_warnings(result.warnings, est.warnings);
      structure = structure.with_params(est.params);
    }

    // Fisher scoring step; phi cancels in B^-1 u, so V is built with phi = 1
    const auto work = assemble(clusters, theta, 1.0, structure, spec.variance);
    const Eigen::VectorXd u = score_from(work, p);
    const Eigen::MatrixXd B = b_from(work, p);
    Eigen::VectorXd step = solve_b(B, u);
    if (!step.allFinite()) throw DivergedFitError("scoring step is not finite");
    // keep the linear predictor in exp range; halve overlong steps
    int halvings = 0;
    while (halvings < 40) {
      bool sane = true;
      for (const auto& c : clusters.clusters) {
        if (((c.design * (theta + step)).cwiseAbs().maxCoeff()) > 690.0) {
          sane = false;
          break;
        }
      }
      if (sane) break;
      step *= 0.5;
      ++halvings;
    }
    if (halvings == 40) throw DivergedFitError("fitted mean overflowed");
    theta += step;
    if (!theta.allFinite()) throw DivergedFitError("theta is no longer finite");

    if (step.cwiseAbs().maxCoeff() < options.tol * (1.0 + theta.cwiseAbs().maxCoeff())) {
      result.converged = true;
      break;
    }
  }

  result.theta = theta;

  // final quantities at theta-hat
  {
    const auto work_plain = assemble(clusters, theta, 1.0,
                                     CorrelationStructure::independence(clusters.n),
                                     spec.variance);
    result.fitted.clear();
    for (const auto& w : work_plain) result.fitted.push_back(w.mu);
    result.residuals = pearson_from(work_plain, spec.variance);
    const auto disp = estimate_dispersion(result.residuals, p);
    result.phi = disp.phi;
    if (disp.phi < 1e-24 || interpolating) {
      result.phi = 0.0;
      result.vartheta = Eigen::VectorXd::Zero(structure.param_count());
      result.cov_model = Eigen::MatrixXd::Zero(p, p);
      result.cov_sandwich = Eigen::MatrixXd::Zero(p, p);
      result.score_norm = 0.0;
      return result;
    }
    auto est = estimate_params(result.residuals, spec.correlation, spec.m_order, result.phi);
    merge_warnings(result.warnings, est.warnings);
    result.vartheta = est.params;
    structure = structure.with_params(est.params);
  }

  const auto work = assemble(clusters, theta, result.phi, structure, spec.variance);
  const Eigen::MatrixXd B = b_from(work, p);
  const Eigen::MatrixXd S = s_from(work, p);
  const Eigen::MatrixXd Binv = solve_b(B, Eigen::MatrixXd::Identity(p, p));
  result.cov_model = symmetrize(Binv);
  result.cov_sandwich = symmetrize(Binv * S * Binv.transpose());
  result.score_norm = score_from(work, p).cwiseAbs().maxCoeff();
  return result;
}

Eigen::MatrixXd sandwich_cov(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                             double phi, const CorrelationStructure& corr,
                             const VarianceFunction& h) {
  const auto work = assemble(clusters, theta, phi, corr, h);
  const Eigen::MatrixXd B = b_from(work, clusters.p);
  const Eigen::MatrixXd S = s_from(work, clusters.p);
  const Eigen::MatrixXd Binv = solve_b(B, Eigen::MatrixXd::Identity(clusters.p, clusters.p));
  return symmetrize(Binv * S * Binv.transpose());
}

Eigen::MatrixXd sandwich_cov(const ClusterSet& clusters, const FitResult& fit) {
  return sandwich_cov(clusters, fit.theta, fit.phi, fit.correlation_structure(),
                      fit.spec.variance);
}

Eigen::MatrixXd model_based_cov(const ClusterSet& clusters, const Eigen::VectorXd& theta,
                                double phi, const CorrelationStructure& corr,
                                const VarianceFunction& h) {
  const auto work = assemble(clusters, theta, phi, corr, h);
  const Eigen::MatrixXd B = b_from(work, clusters.p);
  const Eigen::MatrixXd Binv = solve_b(B, Eigen::MatrixXd::Identity(clusters.p, clusters.p));
  return symmetrize(Binv);
}

Eigen::MatrixXd model_based_cov(const ClusterSet& clusters, const FitResult& fit) {
  return model_based_cov(clusters, fit.theta, fit.phi, fit.correlation_structure(),
                         fit.spec.variance);
}

}  // namespace geeres
