#pragma once

#include <Eigen/Core>
#include <array>
#include <string>

#include "gee_reserve/gee.hpp"
#include "gee_reserve/triangle.hpp"

namespace geeres::testing {

std::string data_dir();

Triangle taylor_ashe();  // n = 10
Triangle abc();          // n = 11

/// Stack cluster designs / values into flat (Z, y) for the GLM oracle.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> stacked(const ClusterSet& clusters);

/// Deterministic random incremental triangle (positive cells).
Triangle random_triangle(int n, unsigned seed);

struct ModelKey {
  CorrelationKind corr;
  VarianceKind variance;
};

// the six standard models in reporting order
inline constexpr std::array<ModelKey, 6> kSixModels = {{
    {CorrelationKind::independence, VarianceKind::linear},
    {CorrelationKind::independence, VarianceKind::quadratic},
    {CorrelationKind::exchangeable, VarianceKind::linear},
    {CorrelationKind::exchangeable, VarianceKind::quadratic},
    {CorrelationKind::ar1, VarianceKind::linear},
    {CorrelationKind::ar1, VarianceKind::quadratic},
}};

ModelSpec spec_of(ModelKey key);

// --- published reference values (reserve tables in thousands) ---

// Taylor-Ashe: per-accident-year reserves for the six models, years 2..10
inline constexpr std::array<std::array<long, 9>, 6> kTaylorAsheReserves = {{
    {95, 470, 710, 985, 1419, 2178, 3920, 4279, 4626},    // Ind linear
    {93, 447, 611, 992, 1453, 2186, 3665, 4122, 4516},    // Ind quadratic
    {100, 473, 683, 1014, 1445, 2194, 3891, 4279, 4631},  // Exch linear
    {93, 447, 611, 992, 1453, 2186, 3665, 4122, 4516},    // Exch quadratic
    {85, 443, 706, 970, 1382, 2166, 3809, 4221, 4585},    // AR(1) linear
    {90, 431, 618, 968, 1412, 2167, 3611, 4090, 4483},    // AR(1) quadratic
}};
inline constexpr std::array<long, 6> kTaylorAsheTotals = {18681, 18086, 18710,
                                                          18086, 18367, 17870};

// QIC_HH / CIC_HH in the model order above
inline constexpr std::array<double, 6> kTaylorAsheQicHH = {
    -857098696.0, 1583.20, -857080756.0, 1583.20, -857086975.0, 1583.58};
inline constexpr std::array<double, 6> kTaylorAsheCicHH = {9.48, 10.66, 9.58,
                                                           10.66, 9.68, 10.85};

// total rmse% and the per-year columns published for Ind linear and AR(1) linear
inline constexpr std::array<double, 6> kTaylorAsheRmsePct = {5.1, 5.6, 6.9, 7.5, 4.8, 5.5};
inline constexpr std::array<double, 9> kTaylorAsheRmseIndLin = {60, 28, 24, 23, 17,
                                                                15, 10, 11, 11};
inline constexpr std::array<double, 9> kTaylorAsheRmseAr1Lin = {60, 24, 19, 19, 14,
                                                                12, 9, 10, 13};

// ABC reference values, same model order
inline constexpr std::array<long, 6> kAbcTotals = {5278, 5238, 5258, 5238, 5311, 5269};
inline constexpr std::array<double, 6> kAbcRmsePct = {1.90, 2.14, 2.00, 2.61, 1.95, 1.96};
inline constexpr std::array<double, 6> kAbcQicHH = {-230052223.0, 1682.24, -230051487.0,
                                                    1682.24, -230052055.0, 1681.86};
inline constexpr std::array<double, 6> kAbcCicHH = {10.21, 11.24, 10.53, 11.24, 9.92, 11.05};

}  // namespace geeres::testing
