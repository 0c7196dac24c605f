#include "gee_reserve/correlation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>

namespace geeres {

namespace {

constexpr double kClip = 0.99;
// minimum distance of the exchangeable factor 1 + (k-1) vt from zero;
// the moment estimate can land exactly on a cluster-size singularity
constexpr double kSingularGuard = 2e-3;

double clip(double v) { return std::clamp(v, -kClip, kClip); }

}  // namespace

std::string to_string(CorrelationKind k) {
  switch (k) {
    case CorrelationKind::independence: return "independence";
    case CorrelationKind::exchangeable: return "exchangeable";
    case CorrelationKind::ar1: return "ar1";
    case CorrelationKind::m_dependent: return "m-dependent";
    case CorrelationKind::unstructured: return "unstructured";
  }
  return "?";
}

CorrelationStructure::CorrelationStructure(CorrelationKind kind, int max_size, int order,
                                           Eigen::VectorXd params)
    : kind_(kind), max_size_(max_size), order_(order), params_(std::move(params)) {
  if (max_size_ < 1) throw IndexOutOfRangeError("correlation structure needs max_size >= 1");
}

CorrelationStructure CorrelationStructure::independence(int max_size) {
  return {CorrelationKind::independence, max_size, 0, Eigen::VectorXd()};
}

CorrelationStructure CorrelationStructure::exchangeable(int max_size, double rho) {
  Eigen::VectorXd p(1);
  p << rho;
  return {CorrelationKind::exchangeable, max_size, 0, p};
}

CorrelationStructure CorrelationStructure::ar1(int max_size, double rho) {
  Eigen::VectorXd p(1);
  p << rho;
  return {CorrelationKind::ar1, max_size, 0, p};
}

CorrelationStructure CorrelationStructure::m_dependent(int max_size, Eigen::VectorXd lag_rhos) {
  const int m = static_cast<int>(lag_rhos.size());
  if (m < 1 || m > max_size - 1)
    throw IndexOutOfRangeError("m-dependent order must lie in 1..max_size-1");
  return {CorrelationKind::m_dependent, max_size, m, std::move(lag_rhos)};
}

CorrelationStructure CorrelationStructure::unstructured(int max_size, Eigen::VectorXd packed) {
  const auto expected = static_cast<Eigen::Index>(max_size) * (max_size - 1) / 2;
  if (packed.size() != expected)
    throw DimensionMismatchError("unstructured needs n(n-1)/2 = " + std::to_string(expected) +
                                 " parameters, got " + std::to_string(packed.size()));
  return {CorrelationKind::unstructured, max_size, 0, std::move(packed)};
}

CorrelationStructure CorrelationStructure::with_params(Eigen::VectorXd params) const {
  switch (kind_) {
    case CorrelationKind::independence:
      if (params.size() != 0) throw DimensionMismatchError("independence takes no parameters");
      return independence(max_size_);
    case CorrelationKind::exchangeable:
      if (params.size() != 1) throw DimensionMismatchError("exchangeable takes one parameter");
      return exchangeable(max_size_, params(0));
    case CorrelationKind::ar1:
      if (params.size() != 1) throw DimensionMismatchError("ar1 takes one parameter");
      return ar1(max_size_, params(0));
    case CorrelationKind::m_dependent:
      return m_dependent(max_size_, std::move(params));
    case CorrelationKind::unstructured:
      return unstructured(max_size_, std::move(params));
  }
  throw Error("unreachable");
}

int CorrelationStructure::packed_index(int j, int k) const {
  if (!(1 <= j && j < k && k <= max_size_))
    throw IndexOutOfRangeError("packed index needs 1 <= j < k <= max_size");
  // row-wise strict upper triangle: (1,2)..(1,n),(2,3)..
  return (j - 1) * max_size_ - j * (j - 1) / 2 + (k - j) - 1;
}

Eigen::MatrixXd CorrelationStructure::build(int k) const {
  if (k < 1 || k > max_size_)
    throw IndexOutOfRangeError("correlation matrix size " + std::to_string(k) +
                               " outside 1.." + std::to_string(max_size_));
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(k, k);
  switch (kind_) {
    case CorrelationKind::independence:
      break;
    case CorrelationKind::exchangeable: {
      const double rho = params_(0);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          if (a != b) C(a, b) = rho;
      break;
    }
    case CorrelationKind::ar1: {
      const double rho = params_(0);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          if (a != b) C(a, b) = std::pow(rho, std::abs(a - b));
      break;
    }
    case CorrelationKind::m_dependent: {
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          const int lag = std::abs(a - b);
          if (lag >= 1 && lag <= order_) C(a, b) = params_(lag - 1);
        }
      break;
    }
    case CorrelationKind::unstructured: {
      for (int a = 1; a <= k; ++a)
        for (int b = a + 1; b <= k; ++b) {
          const double v = params_(packed_index(a, b));
          C(a - 1, b - 1) = v;
          C(b - 1, a - 1) = v;
        }
      break;
    }
  }
  return C;
}

Eigen::MatrixXd CorrelationStructure::matrix(int k) const {
  Eigen::MatrixXd C = build(k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 1e-10)
    throw NotPositiveDefiniteError(to_string(kind_) + " correlation matrix of size " +
                                   std::to_string(k) + " is not positive definite");
  return C;
}

Eigen::MatrixXd CorrelationStructure::working_matrix(int k) const { return build(k); }

std::vector<Eigen::VectorXd> pearson_residuals(const ClusterSet& clusters,
                                               const std::vector<Eigen::VectorXd>& fitted,
                                               const VarianceFunction& h) {
  if (fitted.size() != clusters.clusters.size())
    throw DimensionMismatchError("fitted values do not match the cluster count");
  std::vector<Eigen::VectorXd> out;
  out.reserve(fitted.size());
  for (std::size_t c = 0; c < fitted.size(); ++c) {
    const auto& x = clusters.clusters[c].values;
    const auto& mu = fitted[c];
    if (mu.size() != x.size())
      throw DimensionMismatchError("fitted values do not match cluster size");
    Eigen::VectorXd r(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t) {
      if (!(mu(t) > 0.0))
        throw NonPositiveMeanError("fitted mean must be positive for Pearson residuals");
      r(t) = (x(t) - mu(t)) / std::sqrt(h(mu(t)));
    }
    out.push_back(std::move(r));
  }
  return out;
}

DispersionEstimate estimate_dispersion(const std::vector<Eigen::VectorXd>& residuals, int p) {
  int n_obs = 0;
  double ssr = 0.0;
  for (const auto& r : residuals) {
    n_obs += static_cast<int>(r.size());
    ssr += r.squaredNorm();
  }
  if (n_obs == 0) throw DegenerateFitError("no observations");
  DispersionEstimate est;
  est.denominator = n_obs;
  est.phi = ssr / n_obs;
  est.degenerate = (est.phi == 0.0) || (n_obs <= p);
  return est;
}

namespace {

struct PairProducts {
  // (lag, product/phi) for every within-cluster pair j < k
  std::vector<std::pair<int, double>> items;
};

PairProducts scaled_products(const std::vector<Eigen::VectorXd>& residuals, double phi) {
  PairProducts out;
  for (const auto& r : residuals) {
    const int k = static_cast<int>(r.size());
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) out.items.push_back({b - a, r(a) * r(b) / phi});
  }
  return out;
}

// root of sum_pairs lag * a^(lag-1) * (rho_hat - a^lag) = 0 on (-kClip, kClip)
double solve_ar1(const PairProducts& pairs, std::vector<std::string>& warnings) {
  auto ee = [&](double a) {
    double s = 0.0;
    for (const auto& [lag, rho] : pairs.items) {
      const double w = lag == 1 ? 1.0 : lag * std::pow(a, lag - 1);
      s += w * (rho - std::pow(a, lag));
    }
    return s;
  };
  double lag1_mean = 0.0;
  int lag1_count = 0;
  for (const auto& [lag, rho] : pairs.items)
    if (lag == 1) {
      lag1_mean += rho;
      ++lag1_count;
    }
  lag1_mean = lag1_count > 0 ? lag1_mean / lag1_count : 0.0;

  // bracket scan, then bisection; with several roots keep the one nearest the
  // plain lag-1 moment estimate
  constexpr int kGrid = 396;
  double best = std::numeric_limits<double>::quiet_NaN();
  double prev_a = -kClip;
  double prev_f = ee(prev_a);
  for (int g = 1; g <= kGrid; ++g) {
    const double a = -kClip + 2.0 * kClip * g / kGrid;
    const double f = ee(a);
    if (prev_f == 0.0) {
      best = std::isnan(best) || std::abs(prev_a - lag1_mean) < std::abs(best - lag1_mean)
                 ? prev_a
                 : best;
    } else if (prev_f * f < 0.0) {
      double lo = prev_a, hi = a, flo = prev_f;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = ee(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (flo * fm < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      const double root = 0.5 * (lo + hi);
      if (std::isnan(best) || std::abs(root - lag1_mean) < std::abs(best - lag1_mean))
        best = root;
    }
    prev_a = a;
    prev_f = f;
  }
  if (std::isnan(best)) {
    warnings.push_back("ar1 estimating equation has no root in (-0.99, 0.99); "
                       "clipped lag-1 moment estimate used");
    return clip(lag1_mean);
  }
  return best;
}

}  // namespace

CorrelationEstimate estimate_params(const std::vector<Eigen::VectorXd>& residuals,
                                    CorrelationKind kind, int m_order, double phi) {
  CorrelationEstimate est;
  if (kind == CorrelationKind::independence) {
    est.params = Eigen::VectorXd();
    return est;
  }
  if (!(phi > 0.0)) {
    // interpolating fit; correlations are unidentified
    est.warnings.push_back("dispersion is zero, correlation parameters set to 0");
    int dim = 1;
    if (kind == CorrelationKind::m_dependent) dim = m_order;
    if (kind == CorrelationKind::unstructured) {
      int n = 0;
      for (const auto& r : residuals) n = std::max<int>(n, static_cast<int>(r.size()));
      dim = n * (n - 1) / 2;
    }
    est.params = Eigen::VectorXd::Zero(dim);
    return est;
  }

  const PairProducts pairs = scaled_products(residuals, phi);

  switch (kind) {
    case CorrelationKind::exchangeable: {
      if (pairs.items.empty())
        throw InsufficientPairsError("no within-cluster pairs for exchangeable estimate");
      double sum = 0.0;
      for (const auto& [lag, rho] : pairs.items) sum += rho;
      double vt = clip(sum / static_cast<double>(pairs.items.size()));
      // nudge off cluster-size singular points of the exchangeable inverse
      std::set<int> sizes;
      for (const auto& r : residuals) sizes.insert(static_cast<int>(r.size()));
      for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
        const int k = *it;
        if (k < 2) continue;
        const double factor = 1.0 + (k - 1) * vt;
        if (std::abs(factor) < kSingularGuard) {
          vt = (kSingularGuard - 1.0) / (k - 1);
          est.warnings.push_back(
              "exchangeable estimate adjusted off the singular working matrix at "
              "cluster size " + std::to_string(k));
        }
      }
      est.params = Eigen::VectorXd::Constant(1, vt);
      break;
    }
    case CorrelationKind::ar1: {
      if (pairs.items.empty())
        throw InsufficientPairsError("no within-cluster pairs for ar1 estimate");
      est.params = Eigen::VectorXd::Constant(1, solve_ar1(pairs, est.warnings));
      break;
    }
    case CorrelationKind::m_dependent: {
      if (m_order < 1) throw IndexOutOfRangeError("m-dependent needs m >= 1");
      est.params = Eigen::VectorXd::Zero(m_order);
      for (int lag = 1; lag <= m_order; ++lag) {
        double sum = 0.0;
        int count = 0;
        for (const auto& [l, rho] : pairs.items)
          if (l == lag) {
            sum += rho;
            ++count;
          }
        if (count == 0)
          throw InsufficientPairsError("no pairs at lag " + std::to_string(lag));
        est.params(lag - 1) = clip(sum / count);
      }
      break;
    }
    case CorrelationKind::unstructured: {
      int n = 0;
      for (const auto& r : residuals) n = std::max<int>(n, static_cast<int>(r.size()));
      if (n < 2) throw InsufficientPairsError("unstructured needs clusters of size >= 2");
      est.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * (n - 1) / 2);
      std::vector<std::string> thin_pairs;
      Eigen::Index idx = 0;
      for (int j = 1; j < n; ++j) {
        for (int k = j + 1; k <= n; ++k, ++idx) {
          double sum = 0.0;
          int count = 0;
          for (const auto& r : residuals)
            if (static_cast<int>(r.size()) >= k) {
              sum += r(j - 1) * r(k - 1) / phi;
              ++count;
            }
          if (count == 0)
            throw InsufficientPairsError("no cluster observes the pair (" +
                                         std::to_string(j) + "," + std::to_string(k) + ")");
          if (count < 3)
            thin_pairs.push_back("(" + std::to_string(j) + "," + std::to_string(k) + ")");
          est.params(idx) = clip(sum / count);
        }
      }
      if (!thin_pairs.empty()) {
        std::string msg = "unstructured entries estimated from fewer than 3 clusters:";
        for (const auto& s : thin_pairs) msg += " " + s;
        est.warnings.push_back(msg);
      }
      break;
    }
    case CorrelationKind::independence:
      break;
  }
  return est;
}

}  // namespace geeres
