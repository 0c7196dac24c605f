#include "glm_irls.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace geeres::testing {

namespace {

double variance_of(GlmFamily family, double mu) {
  return family == GlmFamily::quasi_poisson ? mu : mu * mu;
}

}  // namespace

GlmFit fit_glm_irls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, GlmFamily family,
                    double tol, int max_iter) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = Z.cols();
  GlmFit out;

  // standard start: mu = max(y, small positive)
  Eigen::VectorXd mu(n);
  double mean_abs = y.cwiseAbs().mean();
  for (Eigen::Index k = 0; k < n; ++k) mu(k) = std::max(y(k), 1e-3 * mean_abs + 1e-12);
  Eigen::VectorXd eta = mu.array().log().matrix();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);

  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    // log link: d mu / d eta = mu, working weight w = mu^2 / h(mu)
    Eigen::VectorXd w(n), z_work(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double m = mu(k);
      w(k) = m * m / variance_of(family, m);
      z_work(k) = eta(k) + (y(k) - m) / m;
    }
    const Eigen::MatrixXd ZtW = Z.transpose() * w.asDiagonal();
    const Eigen::VectorXd theta_new =
        (ZtW * Z).ldlt().solve(ZtW * z_work);
    const double delta = (theta_new - theta).cwiseAbs().maxCoeff();
    theta = theta_new;
    eta = Z * theta;
    mu = eta.array().exp().matrix();
    if (delta < tol * (1.0 + theta.cwiseAbs().maxCoeff())) {
      out.converged = true;
      break;
    }
  }

  out.theta = theta;
  out.fitted = mu;
  out.pearson_ssr = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r = (y(k) - mu(k)) / std::sqrt(variance_of(family, mu(k)));
    out.pearson_ssr += r * r;
  }
  out.dispersion_moment = out.pearson_ssr / static_cast<double>(n);
  out.dispersion_df = n > p ? out.pearson_ssr / static_cast<double>(n - p) : 0.0;
  out.information = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < n; ++k)
    out.information +=
        (mu(k) * mu(k) / variance_of(family, mu(k))) * Z.row(k).transpose() * Z.row(k);
  return out;
}

Eigen::VectorXd glm_score(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                          GlmFamily family, const Eigen::VectorXd& theta, double phi) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Z.cols());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double mu = std::exp(Z.row(k).dot(theta));
    u += Z.row(k).transpose() * ((y(k) - mu) * mu / variance_of(family, mu) / phi);
  }
  return u;
}

}  // namespace geeres::testing
