#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gee_reserve/gee.hpp"
#include "gee_reserve/prediction.hpp"
#include "gee_reserve/report.hpp"
#include "gee_reserve/selection.hpp"
#include "gee_reserve/simulate.hpp"
#include "gee_reserve/triangle.hpp"

namespace {

using namespace geeres;

struct CommonOptions {
  std::string triangle_path;
  std::string format = "wide";
  std::string kind = "inc";
  std::string mean = "chain-ladder";
  std::string variance = "linear";
  double power = 1.5;
  std::string corr = "ind";
  int m = 1;
  std::string out = "table";
  double tol = 1e-10;
  int max_iter = 200;
  bool no_mse = false;
};

MeanStructure parse_mean(const std::string& s) {
  if (s == "chain-ladder") return MeanStructure::chain_ladder;
  if (s == "hoerl") return MeanStructure::hoerl;
  throw CLI::ValidationError("--mean", "unknown mean structure '" + s + "'");
}

VarianceFunction parse_variance(const std::string& s, double power) {
  if (s == "linear") return VarianceFunction::linear();
  if (s == "quadratic") return VarianceFunction::quadratic();
  if (s == "power") return VarianceFunction::power(power);
  throw CLI::ValidationError("--variance", "unknown variance function '" + s + "'");
}

CorrelationKind parse_corr(const std::string& s) {
  if (s == "ind") return CorrelationKind::independence;
  if (s == "exch") return CorrelationKind::exchangeable;
  if (s == "ar1") return CorrelationKind::ar1;
  if (s == "mdep") return CorrelationKind::m_dependent;
  if (s == "unstr") return CorrelationKind::unstructured;
  throw CLI::ValidationError("--corr", "unknown correlation structure '" + s + "'");
}

OutputFormat parse_out(const std::string& s) {
  if (s == "table") return OutputFormat::table;
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw CLI::ValidationError("--out", "unknown output format '" + s + "'");
}

Triangle load_triangle(const CommonOptions& opt) {
  const TriangleFormat format =
      opt.format == "long" ? TriangleFormat::long_fmt : TriangleFormat::wide;
  const TriangleKind kind =
      opt.kind == "cum" ? TriangleKind::cumulative : TriangleKind::incremental;
  Triangle t = parse_triangle_file(opt.triangle_path, format, kind);
  if (t.kind() == TriangleKind::cumulative) t = decumulate(t);
  return t;
}

ModelSpec make_spec(const CommonOptions& opt) {
  ModelSpec spec;
  spec.mean = parse_mean(opt.mean);
  spec.variance = parse_variance(opt.variance, opt.power);
  spec.correlation = parse_corr(opt.corr);
  spec.m_order = spec.correlation == CorrelationKind::m_dependent ? opt.m : 0;
  return spec;
}

ReserveReport run_pipeline(const ClusterSet& clusters, const DesignBuilder& builder,
                           const ModelSpec& spec, const FitOptions& options, bool no_mse) {
  FitResult f = fit(clusters, spec, options);

  FitResult f_indep = f;
  if (spec.correlation != CorrelationKind::independence) {
    ModelSpec indep = spec;
    indep.correlation = CorrelationKind::independence;
    indep.m_order = 0;
    f_indep = fit(clusters, indep, options);
  }

  const FutureCells future = predict_future(f, builder, /*force=*/true);
  MseEstimate mse;
  if (no_mse) {
    mse.per_year = Eigen::VectorXd::Constant(std::max(0, f.n - 1),
                                             std::numeric_limits<double>::quiet_NaN());
    mse.total = std::numeric_limits<double>::quiet_NaN();
    mse.warnings.push_back("MSE of prediction skipped (--no-mse)");
  } else {
    mse = mse_prediction(clusters, f, future);
  }
  CriteriaReport crit;
  if (f.phi > 0.0 && f_indep.phi > 0.0) {
    crit = criteria(clusters, f, f_indep);
  } else {
    crit.q_indep = crit.qic = crit.qic_hh = crit.cic = crit.cic_hh =
        std::numeric_limits<double>::quiet_NaN();
  }
  return reserve_report(f, future, mse, crit);
}

int cmd_fit(const CommonOptions& opt) {
  const Triangle t = load_triangle(opt);
  const ModelSpec spec = make_spec(opt);
  if (spec.correlation == CorrelationKind::unstructured && !opt.no_mse)
    throw UnsupportedStructureForPredictionError(
        "unstructured working correlation has no translation-symmetric extension; "
        "pass --no-mse to fit without prediction error estimates");
  const DesignBuilder builder(spec.mean, t.size());
  const ClusterSet clusters = to_clusters(t, builder);
  FitOptions options;
  options.tol = opt.tol;
  options.max_iter = opt.max_iter;
  const ReserveReport report = run_pipeline(clusters, builder, spec, options, opt.no_mse);
  std::cout << render(report, parse_out(opt.out));
  return report.converged ? 0 : 2;
}

int compare_threads() {
  if (const char* env = std::getenv("GEE_RESERVE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    return cap <= 0 ? 1 : static_cast<int>(cap);
  }
  return 6;
}

int cmd_compare(const CommonOptions& opt) {
  const Triangle t = load_triangle(opt);
  const DesignBuilder builder(parse_mean(opt.mean), t.size());
  const ClusterSet clusters = to_clusters(t, builder);
  FitOptions options;
  options.tol = opt.tol;
  options.max_iter = opt.max_iter;

  const std::vector<CorrelationKind> corrs = {
      CorrelationKind::independence, CorrelationKind::exchangeable, CorrelationKind::ar1};
  const std::vector<VarianceKind> vars = {VarianceKind::linear, VarianceKind::quadratic};

  CompareReport report;
  report.n = t.size();
  report.entries.resize(corrs.size() * vars.size());

  std::vector<std::pair<std::size_t, std::function<void()>>> jobs;
  std::size_t slot = 0;
  for (const auto var : vars) {
    for (const auto corr : corrs) {
      report.entries[slot].correlation = corr;
      report.entries[slot].variance = var;
      const std::size_t my_slot = slot;
      jobs.emplace_back(my_slot, [&, my_slot, corr, var] {
        ModelSpec spec;
        spec.mean = parse_mean(opt.mean);
        spec.variance = var == VarianceKind::linear ? VarianceFunction::linear()
                                                    : VarianceFunction::quadratic();
        spec.correlation = corr;
        try {
          report.entries[my_slot].report =
              run_pipeline(clusters, builder, spec, options, opt.no_mse);
        } catch (const std::exception& e) {
          report.entries[my_slot].error = e.what();
        }
      });
      ++slot;
    }
  }

  const int max_parallel = std::max(1, compare_threads());
  for (std::size_t begin = 0; begin < jobs.size();) {
    const std::size_t end = std::min(jobs.size(), begin + static_cast<std::size_t>(max_parallel));
    std::vector<std::future<void>> batch;
    for (std::size_t k = begin; k < end; ++k)
      batch.push_back(std::async(max_parallel > 1 ? std::launch::async : std::launch::deferred,
                                 jobs[k].second));
    for (auto& f : batch) f.get();
    begin = end;
  }

  std::cout << render(report, parse_out(opt.out));
  int exit_code = 0;
  for (const auto& e : report.entries) {
    if (!e.report) return 1;
    if (!e.report->converged) exit_code = 2;
  }
  return exit_code;
}

struct SimulateOptions {
  int n = 10;
  int reps = 500;
  std::uint64_t seed = 1;
  std::string theta_file;
  std::string marginal = "gamma";
  double phi = 0.05;
  std::vector<double> vartheta;
};

Eigen::VectorXd default_theta(int n) {
  // chain-ladder-like surface: rising accident-year level, decaying tail
  const DesignBuilder builder(MeanStructure::chain_ladder, n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(builder.param_count());
  theta(0) = 8.0;
  for (int i = 2; i <= n; ++i) theta(i - 1) = 0.03 * (i - 1);
  for (int j = 2; j <= n; ++j) theta(n - 1 + j - 2) = 0.9 - 0.35 * (j - 2);
  return theta;
}

int cmd_simulate(const CommonOptions& opt, const SimulateOptions& sim) {
  SimSpec spec;
  spec.n = sim.n;
  spec.mean = parse_mean(opt.mean);
  spec.variance = parse_variance(opt.variance, opt.power);
  spec.correlation = parse_corr(opt.corr);
  spec.m_order = spec.correlation == CorrelationKind::m_dependent ? opt.m : 0;
  spec.marginal = sim.marginal == "lognormal" ? MarginalFamily::lognormal : MarginalFamily::gamma;
  spec.seed = sim.seed;
  spec.phi = sim.phi;

  if (!sim.theta_file.empty()) {
    std::ifstream in(sim.theta_file);
    if (!in) throw Error("cannot open '" + sim.theta_file + "'");
    nlohmann::json j;
    in >> j;
    const auto theta = j.at("theta").get<std::vector<double>>();
    spec.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(),
                                                   static_cast<Eigen::Index>(theta.size()));
    if (j.contains("phi")) spec.phi = j.at("phi").get<double>();
    if (j.contains("vartheta")) {
      const auto vt = j.at("vartheta").get<std::vector<double>>();
      spec.vartheta =
          Eigen::Map<const Eigen::VectorXd>(vt.data(), static_cast<Eigen::Index>(vt.size()));
    }
  } else {
    spec.theta = default_theta(spec.n);
  }
  if (!sim.vartheta.empty())
    spec.vartheta = Eigen::Map<const Eigen::VectorXd>(
        sim.vartheta.data(), static_cast<Eigen::Index>(sim.vartheta.size()));
  if (spec.vartheta.size() == 0 && spec.correlation != CorrelationKind::independence)
    spec.vartheta = Eigen::VectorXd::Constant(
        spec.correlation == CorrelationKind::m_dependent ? spec.m_order : 1, 0.3);

  const McSummary summary = mc_validate(spec, sim.reps);
  std::cout << to_json(summary).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GEE claims reserving for run-off triangles"};
  app.require_subcommand(1);

  CommonOptions opt;
  SimulateOptions sim;

  auto add_model_flags = [&](CLI::App* cmd, bool with_data) {
    if (with_data) {
      cmd->add_option("--triangle", opt.triangle_path, "triangle CSV path")->required();
      cmd->add_option("--format", opt.format, "input layout")
          ->check(CLI::IsMember({"wide", "long"}));
      cmd->add_option("--kind", opt.kind, "incremental or cumulative input")
          ->check(CLI::IsMember({"inc", "cum"}));
    }
    cmd->add_option("--mean", opt.mean, "mean structure")
        ->check(CLI::IsMember({"chain-ladder", "hoerl"}));
    cmd->add_option("--out", opt.out, "output format")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    cmd->add_option("--tol", opt.tol, "convergence tolerance");
    cmd->add_option("--max-iter", opt.max_iter, "iteration cap");
  };
  auto add_single_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--variance", opt.variance, "variance function")
        ->check(CLI::IsMember({"linear", "quadratic", "power"}));
    cmd->add_option("--power", opt.power, "power variance exponent in (1,2)");
    cmd->add_option("--corr", opt.corr, "working correlation structure")
        ->check(CLI::IsMember({"ind", "exch", "ar1", "mdep", "unstr"}));
    cmd->add_option("--m", opt.m, "m-dependent order");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit one model and report reserves");
  add_model_flags(fit_cmd, true);
  add_single_model_flags(fit_cmd);
  fit_cmd->add_flag("--no-mse", opt.no_mse, "skip the MSE of prediction");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "fit the six standard models and compare");
  add_model_flags(compare_cmd, true);
  compare_cmd->add_flag("--no-mse", opt.no_mse, "skip the MSE of prediction");

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Monte Carlo validation on synthetic triangles");
  add_model_flags(simulate_cmd, false);
  add_single_model_flags(simulate_cmd);
  simulate_cmd->add_option("--n", sim.n, "triangle size");
  simulate_cmd->add_option("--reps", sim.reps, "number of replications");
  simulate_cmd->add_option("--seed", sim.seed, "RNG seed");
  simulate_cmd->add_option("--theta-file", sim.theta_file,
                           "JSON file with theta (and optional phi, vartheta)");
  simulate_cmd->add_option("--marginal", sim.marginal, "marginal family")
      ->check(CLI::IsMember({"gamma", "lognormal"}));
  simulate_cmd->add_option("--phi", sim.phi, "true dispersion");
  simulate_cmd->add_option("--vartheta", sim.vartheta, "true correlation parameters");

  // flag consistency checks
  app.callback([&] {
    if (opt.variance != "power" && fit_cmd->count("--power") + simulate_cmd->count("--power") > 0)
      throw CLI::ValidationError("--power", "only valid with --variance power");
    if (opt.corr != "mdep" && fit_cmd->count("--m") + simulate_cmd->count("--m") > 0)
      throw CLI::ValidationError("--m", "only valid with --corr mdep");
  });

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(fit_cmd)) return cmd_fit(opt);
    if (app.got_subcommand(compare_cmd)) return cmd_compare(opt);
    if (app.got_subcommand(simulate_cmd)) return cmd_simulate(opt, sim);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
