#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "gee_reserve/errors.hpp"

namespace geeres {

class DesignBuilder;

/// 1-based (accident year, development year) cell index.
struct Cell {
  int i = 0;
  int j = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class TriangleKind { incremental, cumulative };

enum class TriangleFormat { wide, long_fmt };

/// Run-off triangle of claim amounts: n accident years (rows), accident year i
/// observed for development years j = 1..n+1-i. Immutable after construction.
class Triangle {
 public:
  Triangle(int n, TriangleKind kind, std::vector<double> cells);

  int size() const { return n_; }
  TriangleKind kind() const { return kind_; }
  int row_length(int i) const;
  int cell_count() const { return static_cast<int>(cells_.size()); }
  bool contains(int i, int j) const;
  double operator()(int i, int j) const;
  double grand_total() const;

  /// Observed cells in (i, j) row-major order.
  std::vector<Cell> cells() const;

 private:
  int offset(int i, int j) const;

  int n_;
  TriangleKind kind_;
  std::vector<double> cells_;  // row-major, row i holds n+1-i values
};

/// Parse a triangle from CSV text.
///
/// Wide format: one row per accident year, observed cells left to right,
/// trailing cells empty. An optional header row (detected by non-numeric
/// fields) may carry `dev_1..dev_n`; if its first field is not a dev label the
/// leading column is treated as an accident-year label and skipped.
///
/// Long format: rows `i,j,value` with an optional `i,j,value` header.
Triangle parse_triangle(std::istream& in, TriangleFormat format, TriangleKind kind);
Triangle parse_triangle(const std::string& text, TriangleFormat format, TriangleKind kind);
Triangle parse_triangle_file(const std::string& path, TriangleFormat format, TriangleKind kind);

/// Serialize to CSV text; parse_triangle(to_csv(t), format, t.kind()) == t.
std::string to_csv(const Triangle& t, TriangleFormat format);

/// Row-wise running sums; input must be incremental.
Triangle cumulate(const Triangle& t);
/// Row-wise differences; input must be cumulative. Inverse of cumulate.
Triangle decumulate(const Triangle& t);

/// One accident year treated as a dependent cluster: observed values in
/// development-year order plus the matching design rows.
struct Cluster {
  int accident_year = 0;
  Eigen::VectorXd values;   // X_i, length n+1-i
  Eigen::MatrixXd design;   // (n+1-i) x p, row j-1 is the covariate row of cell (i,j)
};

struct ClusterSet {
  int n = 0;  // number of accident years
  int p = 0;  // parameter dimension
  std::vector<Cluster> clusters;

  int total_observations() const;
  std::vector<Cell> cells() const;
};

/// Split an incremental triangle into accident-year clusters with covariate
/// rows taken from `design`.
ClusterSet to_clusters(const Triangle& t, const DesignBuilder& design);

}  // namespace geeres
