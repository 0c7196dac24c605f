#include "gee_reserve/simulate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "gee_reserve/prediction.hpp"

namespace geeres {

std::string to_string(MarginalFamily m) {
  return m == MarginalFamily::gamma ? "gamma" : "lognormal";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation refined with one Halley step.
double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error("normal_quantile needs u in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - u;
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  const double w = e / pdf;
  return x - w / (1.0 + 0.5 * x * w);
}

namespace {

// series for x < a+1, continued fraction otherwise
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int it = 0; it < 500; ++it) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error("regularized_gamma_p needs a > 0");
  if (x <= 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_quantile(double shape, double scale, double u) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw Error("gamma_quantile needs shape, scale > 0");
  if (!(u > 0.0 && u < 1.0)) throw Error("gamma_quantile needs u in (0,1)");
  // Wilson-Hilferty start
  const double z = normal_quantile(u);
  const double c = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * std::sqrt(shape));
  double x = shape * c * c * c;
  if (!(x > 0.0)) x = shape * std::exp((std::log(u) + std::lgamma(shape)) / shape);
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double f = regularized_gamma_p(shape, x) - u;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double pdf = std::exp((shape - 1.0) * std::log(x) - x - std::lgamma(shape));
    double next = x;
    if (pdf > 0.0) next = x - f / pdf;
    if (!(next > lo) || !(next < hi))
      next = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * (1.0 + std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x * scale;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53-bit mantissa uniform in (0, 1)
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0 && u < 1.0) return u;
    }
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

CorrelationStructure structure_of(const SimSpec& spec) {
  switch (spec.correlation) {
    case CorrelationKind::independence:
      return CorrelationStructure::independence(spec.n);
    case CorrelationKind::exchangeable:
      return CorrelationStructure::exchangeable(spec.n, spec.vartheta(0));
    case CorrelationKind::ar1:
      return CorrelationStructure::ar1(spec.n, spec.vartheta(0));
    case CorrelationKind::m_dependent:
      return CorrelationStructure::m_dependent(spec.n, spec.vartheta);
    case CorrelationKind::unstructured:
      return CorrelationStructure::unstructured(spec.n, spec.vartheta);
  }
  throw Error("unreachable");
}

Eigen::MatrixXd copula_cholesky(const SimSpec& spec) {
  const Eigen::MatrixXd C = structure_of(spec).matrix(spec.n);  // PD validated
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("copula correlation matrix is not positive definite");
  return llt.matrixL();
}

Eigen::MatrixXd draw_full(const SimSpec& spec, const Eigen::MatrixXd& chol,
                          const Eigen::MatrixXd& mu, Rng& rng) {
  const int n = spec.n;
  Eigen::MatrixXd full(n, n);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) z(j) = rng.normal();
    const Eigen::VectorXd corr_z = chol * z;
    for (int j = 0; j < n; ++j) {
      const double m = mu(i, j);
      const double v = spec.phi * spec.variance(m);
      if (spec.marginal == MarginalFamily::gamma) {
        const double shape = m * m / v;
        const double scale = v / m;
        full(i, j) = gamma_quantile(shape, scale, normal_cdf(corr_z(j)));
      } else {
        const double sigma2 = std::log1p(v / (m * m));
        const double mean_log = std::log(m) - 0.5 * sigma2;
        full(i, j) = std::exp(mean_log + std::sqrt(sigma2) * corr_z(j));
      }
    }
  }
  return full;
}

Eigen::MatrixXd mean_surface(const SimSpec& spec) {
  const DesignBuilder builder(spec.mean, spec.n);
  if (spec.theta.size() != builder.param_count())
    throw DimensionMismatchError("theta does not match the mean structure");
  Eigen::MatrixXd mu(spec.n, spec.n);
  const LinkFunction link;
  for (int i = 1; i <= spec.n; ++i)
    for (int j = 1; j <= spec.n; ++j)
      mu(i - 1, j - 1) = link.inverse(builder.row(i, j).dot(spec.theta));
  return mu;
}

Triangle observed_part(const Eigen::MatrixXd& full) {
  const int n = static_cast<int>(full.rows());
  std::vector<double> cells;
  cells.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n + 1 - i; ++j) cells.push_back(full(i - 1, j - 1));
  return Triangle(n, TriangleKind::incremental, std::move(cells));
}

int resolve_threads(int requested, int jobs) {
  if (const char* env = std::getenv("GEE_RESERVE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap <= 0) return 1;
    requested = requested <= 0 ? static_cast<int>(cap)
                               : std::min<int>(requested, static_cast<int>(cap));
  }
  if (requested <= 0)
    requested = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(requested, jobs));
}

}  // namespace

SimulatedTriangle simulate_triangle(const SimSpec& spec) {
  if (spec.n < 1) throw IndexOutOfRangeError("simulation needs n >= 1");
  if (!(spec.phi > 0.0)) throw Error("simulation needs phi > 0");
  const Eigen::MatrixXd mu = mean_surface(spec);
  const Eigen::MatrixXd chol = copula_cholesky(spec);
  Rng rng(splitmix64(spec.seed));
  Eigen::MatrixXd full = draw_full(spec, chol, mu, rng);
  return {observed_part(full), std::move(full)};
}

McSummary mc_validate(const SimSpec& spec, int replications, int threads) {
  if (replications < 2) throw Error("mc_validate needs at least 2 replications");
  const DesignBuilder builder(spec.mean, spec.n);
  const int p = builder.param_count();
  const Eigen::MatrixXd mu = mean_surface(spec);
  const Eigen::MatrixXd chol = copula_cholesky(spec);

  ModelSpec model;
  model.mean = spec.mean;
  model.variance = spec.variance;
  model.correlation = spec.correlation;
  model.m_order = spec.m_order;

  struct RepResult {
    bool ok = false;
    double err = 0.0;       // R-hat minus realized R
    double est_mse = 0.0;
    Eigen::ArrayXd covered;
    Eigen::VectorXd vartheta;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(replications));

  auto run_rep = [&](int rep) {
    RepResult out;
    Rng rng(splitmix64(spec.seed + static_cast<std::uint64_t>(rep)));
    const Eigen::MatrixXd full = draw_full(spec, chol, mu, rng);
    try {
      const Triangle observed = observed_part(full);
      const ClusterSet clusters = to_clusters(observed, builder);
      const FitResult f = fit(clusters, model);
      const FutureCells future = predict_future(f, builder, /*force=*/true);
      const MseEstimate mse = mse_prediction(clusters, f, future);
      double reserve_hat = 0.0;
      for (const auto& y : future.years) reserve_hat += y.mean.sum();
      double reserve_real = 0.0;
      for (int i = 2; i <= spec.n; ++i)
        for (int j = spec.n + 2 - i; j <= spec.n; ++j) reserve_real += full(i - 1, j - 1);
      out.err = reserve_hat - reserve_real;
      out.est_mse = mse.total;
      out.vartheta = f.vartheta;
      out.covered = Eigen::ArrayXd::Zero(p);
      for (int k = 0; k < p; ++k) {
        const double se = std::sqrt(std::max(0.0, f.cov_sandwich(k, k)));
        out.covered(k) = std::abs(f.theta(k) - spec.theta(k)) <= 1.959963984540054 * se ? 1.0 : 0.0;
      }
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
    results[static_cast<std::size_t>(rep)] = std::move(out);
  };

  const int n_threads = resolve_threads(threads, replications);
  if (n_threads <= 1) {
    for (int rep = 0; rep < replications; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= replications) return;
          run_rep(rep);
        }
      });
    for (auto& t : pool) t.join();
  }

  McSummary summary;
  summary.spec = spec;
  summary.replications = replications;
  summary.coverage = Eigen::VectorXd::Zero(p);
  std::vector<double> est;
  double sum_sq = 0.0, sum_err = 0.0;
  int ok = 0;
  for (const auto& r : results) {
    if (!r.ok) {
      ++summary.failures;
      continue;
    }
    ++ok;
    sum_sq += r.err * r.err;
    sum_err += r.err;
    est.push_back(r.est_mse);
    summary.coverage += r.covered.matrix();
    if (summary.vartheta_mean.size() == 0)
      summary.vartheta_mean = Eigen::VectorXd::Zero(r.vartheta.size());
    summary.vartheta_mean += r.vartheta;
  }
  if (ok == 0) throw DegenerateFitError("every replication failed");
  summary.empirical_mse = sum_sq / ok;
  summary.mean_reserve_error = sum_err / ok;
  summary.coverage /= static_cast<double>(ok);
  if (summary.vartheta_mean.size() > 0) summary.vartheta_mean /= static_cast<double>(ok);
  std::sort(est.begin(), est.end());
  summary.mean_estimated_mse = 0.0;
  for (double v : est) summary.mean_estimated_mse += v;
  summary.mean_estimated_mse /= static_cast<double>(est.size());
  summary.median_estimated_mse = est.size() % 2 == 1
                                     ? est[est.size() / 2]
                                     : 0.5 * (est[est.size() / 2 - 1] + est[est.size() / 2]);
  return summary;
}

}  // namespace geeres
