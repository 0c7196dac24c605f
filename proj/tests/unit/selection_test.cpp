#include <doctest.h>

#include <cmath>

#include "gee_reserve/selection.hpp"
#include "../support/fixtures.hpp"
#include "../support/glm_irls.hpp"

using namespace geeres;
using namespace geeres::testing;

namespace {

ClusterSet ta_clusters() {
  static const ClusterSet set =
      to_clusters(taylor_ashe(), DesignBuilder(MeanStructure::chain_ladder, 10));
  return set;
}

ClusterSet tiny_clusters() {
  Triangle t = parse_triangle("1,1,4\n1,2,2\n2,1,3", TriangleFormat::long_fmt,
                              TriangleKind::incremental);
  return to_clusters(t, DesignBuilder(MeanStructure::chain_ladder, 2));
}

}  // namespace

TEST_CASE("quasi-likelihood arithmetic at x = mu") {
  ClusterSet set = tiny_clusters();
  // fitted = data: q_linear = x log x - x, q_quadratic = -(1 + log x)
  std::vector<Eigen::VectorXd> mu = {set.clusters[0].values, set.clusters[1].values};
  const double q_lin = quasi_likelihood_indep(set, mu, VarianceFunction::linear());
  double expect_lin = 0.0;
  for (double x : {4.0, 2.0, 3.0}) expect_lin += x * std::log(x) - x;
  CHECK(q_lin == doctest::Approx(expect_lin).epsilon(1e-14));

  const double q_quad = quasi_likelihood_indep(set, mu, VarianceFunction::quadratic());
  double expect_quad = 0.0;
  for (double x : {4.0, 2.0, 3.0}) expect_quad += -(1.0 + std::log(x));
  CHECK(q_quad == doctest::Approx(expect_quad).epsilon(1e-14));
}

TEST_CASE("x = mu = 1 gives q = -1 under the linear variance") {
  ClusterSet set;
  set.n = 1;
  set.p = 1;
  Cluster c;
  c.accident_year = 1;
  c.values = Eigen::VectorXd::Constant(1, 1.0);
  c.design = Eigen::MatrixXd::Constant(1, 1, 1.0);
  set.clusters.push_back(c);
  std::vector<Eigen::VectorXd> mu = {Eigen::VectorXd::Constant(1, 1.0)};
  CHECK(quasi_likelihood_indep(set, mu, VarianceFunction::linear()) == doctest::Approx(-1.0));
}

TEST_CASE("power-variance quasi-likelihood follows the Tweedie integral") {
  ClusterSet set;
  set.n = 1;
  set.p = 1;
  Cluster c;
  c.accident_year = 1;
  c.values = Eigen::VectorXd::Constant(1, 3.0);
  c.design = Eigen::MatrixXd::Constant(1, 1, 1.0);
  set.clusters.push_back(c);
  std::vector<Eigen::VectorXd> mu = {Eigen::VectorXd::Constant(1, 2.0)};
  const double q = quasi_likelihood_indep(set, mu, VarianceFunction::power(1.5));
  const double expected = std::pow(2.0, -0.5) * (3.0 / (-0.5) - 2.0 / 0.5);
  CHECK(q == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("omega for a single cell reduces to mu over phi") {
  ClusterSet set;
  set.n = 1;
  set.p = 1;
  Cluster c;
  c.accident_year = 1;
  c.values = Eigen::VectorXd::Constant(1, 5.0);
  c.design = Eigen::MatrixXd::Constant(1, 1, 1.0);
  set.clusters.push_back(c);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, std::log(5.0));
  // linear h: D'A^-1 D = mu; divided by phi
  const Eigen::MatrixXd omega =
      omega_independence(set, theta, 2.0, VarianceFunction::linear());
  CHECK(omega(0, 0) == doctest::Approx(5.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("phi times omega equals the unscaled GLM information") {
  const ClusterSet set = ta_clusters();
  const FitResult f = fit(set, spec_of({CorrelationKind::independence, VarianceKind::linear}));
  const Eigen::MatrixXd omega = omega_independence(set, f);
  const auto [Z, y] = stacked(set);
  const GlmFit glm = fit_glm_irls(Z, y, GlmFamily::quasi_poisson);
  CHECK(((f.phi * omega) - glm.information).cwiseAbs().maxCoeff() <
        1e-6 * glm.information.cwiseAbs().maxCoeff());
  CHECK((omega - omega.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("criteria satisfy the defining identities") {
  const ClusterSet set = ta_clusters();
  const FitResult indep = fit(set, spec_of({CorrelationKind::independence, VarianceKind::linear}));
  const FitResult ar1 = fit(set, spec_of({CorrelationKind::ar1, VarianceKind::linear}));
  const CriteriaReport r = criteria(set, ar1, indep);
  CHECK(r.qic == doctest::Approx(-2.0 * r.q_indep + 2.0 * r.cic).epsilon(1e-12));
  CHECK(r.qic_hh == doctest::Approx(-2.0 * r.q_indep + 2.0 * r.cic_hh).epsilon(1e-12));
}

TEST_CASE("independence row: HH and plain criteria coincide and are idempotent") {
  const ClusterSet set = ta_clusters();
  const FitResult indep = fit(set, spec_of({CorrelationKind::independence, VarianceKind::quadratic}));
  const CriteriaReport a = criteria(set, indep, indep);
  CHECK(a.cic == doctest::Approx(a.cic_hh).epsilon(1e-12));
  CHECK(a.qic == doctest::Approx(a.qic_hh).epsilon(1e-12));
  const CriteriaReport b = criteria(set, indep, indep);
  CHECK(a.qic_hh == b.qic_hh);
  CHECK(a.cic_hh == b.cic_hh);
}

TEST_CASE("Taylor-Ashe criteria reproduce the published values") {
  const ClusterSet set = ta_clusters();
  const FitResult ind_lin = fit(set, spec_of({CorrelationKind::independence, VarianceKind::linear}));
  const FitResult exch_lin = fit(set, spec_of({CorrelationKind::exchangeable, VarianceKind::linear}));
  const FitResult ar1_lin = fit(set, spec_of({CorrelationKind::ar1, VarianceKind::linear}));
  CHECK(criteria(set, ind_lin, ind_lin).qic_hh == doctest::Approx(-857098696.0).epsilon(1e-6));
  CHECK(criteria(set, ind_lin, ind_lin).cic_hh == doctest::Approx(9.48).epsilon(1e-3));
  CHECK(criteria(set, exch_lin, ind_lin).qic_hh == doctest::Approx(-857080756.0).epsilon(1e-6));
  CHECK(criteria(set, ar1_lin, ind_lin).cic_hh == doctest::Approx(9.68).epsilon(1e-3));

  const FitResult ind_quad = fit(set, spec_of({CorrelationKind::independence, VarianceKind::quadratic}));
  const CriteriaReport quad = criteria(set, ind_quad, ind_quad);
  CHECK(quad.qic_hh == doctest::Approx(1583.20).epsilon(1e-4));
  CHECK(quad.cic_hh == doctest::Approx(10.66).epsilon(1e-3));
}

TEST_CASE("mismatched models are rejected") {
  const ClusterSet set = ta_clusters();
  const FitResult ind_lin = fit(set, spec_of({CorrelationKind::independence, VarianceKind::linear}));
  const FitResult ind_quad = fit(set, spec_of({CorrelationKind::independence, VarianceKind::quadratic}));
  const FitResult ar1_lin = fit(set, spec_of({CorrelationKind::ar1, VarianceKind::linear}));
  CHECK_THROWS_AS(criteria(set, ar1_lin, ind_quad), MismatchedModelsError);
  CHECK_THROWS_AS(criteria(set, ind_lin, ar1_lin), MismatchedModelsError);
}
