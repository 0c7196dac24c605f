#include "fixtures.hpp"

#include <random>

#include "gee_reserve/model.hpp"

#ifndef GEE_RESERVE_DATA_DIR
#error "GEE_RESERVE_DATA_DIR must be defined by the build"
#endif

namespace geeres::testing {

std::string data_dir() { return GEE_RESERVE_DATA_DIR; }

Triangle taylor_ashe() {
  return parse_triangle_file(data_dir() + "/taylor_ashe.csv", TriangleFormat::wide,
                             TriangleKind::incremental);
}

Triangle abc() {
  return parse_triangle_file(data_dir() + "/abc.csv", TriangleFormat::wide,
                             TriangleKind::incremental);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> stacked(const ClusterSet& clusters) {
  const int n_obs = clusters.total_observations();
  Eigen::MatrixXd Z(n_obs, clusters.p);
  Eigen::VectorXd y(n_obs);
  int row = 0;
  for (const auto& c : clusters.clusters) {
    for (Eigen::Index t = 0; t < c.values.size(); ++t, ++row) {
      Z.row(row) = c.design.row(t);
      y(row) = c.values(t);
    }
  }
  return {Z, y};
}

Triangle random_triangle(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::lognormal_distribution<double> cell(6.0, 0.4);
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n + 1 - i; ++j)
      cells.push_back(cell(rng) * std::exp(-0.3 * (j - 1)));
  return Triangle(n, TriangleKind::incremental, std::move(cells));
}

ModelSpec spec_of(ModelKey key) {
  ModelSpec spec;
  spec.mean = MeanStructure::chain_ladder;
  spec.variance = key.variance == VarianceKind::linear ? VarianceFunction::linear()
                                                       : VarianceFunction::quadratic();
  spec.correlation = key.corr;
  return spec;
}

}  // namespace geeres::testing
