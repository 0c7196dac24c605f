#include "gee_reserve/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace geeres {

namespace {

using nlohmann::ordered_json;

long long to_thousands(double v) { return std::llround(v / 1000.0); }

std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

ordered_json num(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return round_sig10(v);
}

ordered_json vec(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(num(v(k)));
  return arr;
}

ordered_json model_block(const ModelSpec& spec) {
  ordered_json model;
  model["mean"] = to_string(spec.mean);
  model["link"] = to_string(spec.link.kind());
  model["variance"] = to_string(spec.variance.kind());
  if (spec.variance.kind() == VarianceKind::power) model["power"] = num(spec.variance.exponent());
  model["corr"] = to_string(spec.correlation);
  if (spec.correlation == CorrelationKind::m_dependent) model["m"] = spec.m_order;
  return model;
}

std::string model_label(CorrelationKind corr, VarianceKind var) {
  std::string c;
  switch (corr) {
    case CorrelationKind::independence: c = "Ind"; break;
    case CorrelationKind::exchangeable: c = "Exch"; break;
    case CorrelationKind::ar1: c = "AR(1)"; break;
    case CorrelationKind::m_dependent: c = "m-dep"; break;
    case CorrelationKind::unstructured: c = "Unstr"; break;
  }
  return c + " " + to_string(var);
}

}  // namespace

double round_sig10(double x) {
  if (!std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return std::strtod(buf, nullptr);
}

ordered_json to_json(const ReserveReport& report) {
  ordered_json j;
  j["model"] = model_block(report.spec);
  ordered_json conv;
  conv["converged"] = report.converged;
  conv["iterations"] = report.iterations;
  conv["score_norm"] = num(report.score_norm);
  j["convergence"] = conv;
  j["theta"] = vec(report.theta);
  j["phi"] = num(report.phi);
  j["vartheta"] = vec(report.vartheta);
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json row;
    row["i"] = r.accident_year;
    row["reserve"] = num(r.reserve);
    row["mse"] = num(r.mse);
    row["rmse_pct"] = num(r.rmse_pct);
    rows.push_back(row);
  }
  j["reserves"] = rows;
  ordered_json total;
  total["reserve"] = num(report.total_reserve);
  total["mse"] = num(report.total_mse);
  total["rmse_pct"] = num(report.total_rmse_pct);
  j["total"] = total;
  ordered_json crit;
  crit["q_indep"] = num(report.criteria.q_indep);
  crit["qic"] = num(report.criteria.qic);
  crit["qic_hh"] = num(report.criteria.qic_hh);
  crit["cic"] = num(report.criteria.cic);
  crit["cic_hh"] = num(report.criteria.cic_hh);
  j["criteria"] = crit;
  j["warnings"] = report.warnings;
  return j;
}

std::string render(const ReserveReport& report, OutputFormat format) {
  if (format == OutputFormat::json) return to_json(report).dump(2) + "\n";
  std::ostringstream out;
  if (format == OutputFormat::csv) {
    out << "i,reserve,mse,rmse_pct\n";
    for (const auto& r : report.rows)
      out << r.accident_year << ',' << round_sig10(r.reserve) << ',' << round_sig10(r.mse)
          << ',' << round_sig10(r.rmse_pct) << '\n';
    out << "total," << round_sig10(report.total_reserve) << ','
        << round_sig10(report.total_mse) << ',' << round_sig10(report.total_rmse_pct) << '\n';
    return out.str();
  }

  out << "Model: " << model_label(report.spec.correlation, report.spec.variance.kind());
  if (report.spec.variance.kind() == VarianceKind::power)
    out << " (q=" << fixed(report.spec.variance.exponent(), 2) << ")";
  out << ", mean structure " << to_string(report.spec.mean) << ", log link\n";
  out << (report.converged ? "Converged" : "NOT converged") << " after "
      << report.iterations << " iterations, phi = " << fixed(report.phi, 6);
  if (report.vartheta.size() > 0) {
    out << ", vartheta =";
    for (Eigen::Index k = 0; k < report.vartheta.size(); ++k)
      out << ' ' << fixed(report.vartheta(k), 4);
  }
  out << "\n\n";
  out << "Accident year    Reserve (000s)    rmse%\n";
  for (const auto& r : report.rows) {
    if (r.accident_year == 1) continue;
    char line[96];
    std::snprintf(line, sizeof(line), "i=%-2d   %20lld   %8s\n", r.accident_year,
                  to_thousands(r.reserve), fixed(r.rmse_pct, 1).c_str());
    out << line;
  }
  char line[96];
  std::snprintf(line, sizeof(line), "Total  %20lld   %8s\n",
                to_thousands(report.total_reserve), fixed(report.total_rmse_pct, 1).c_str());
  out << line;
  out << "\nQIC_HH = " << fixed(report.criteria.qic_hh, 2)
      << "   CIC_HH = " << fixed(report.criteria.cic_hh, 2)
      << "   QIC = " << fixed(report.criteria.qic, 2)
      << "   CIC = " << fixed(report.criteria.cic, 2) << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

ordered_json to_json(const CompareReport& report) {
  ordered_json j;
  j["n"] = report.n;
  ordered_json models = ordered_json::array();
  for (const auto& e : report.entries) {
    ordered_json entry;
    entry["corr"] = to_string(e.correlation);
    entry["variance"] = to_string(e.variance);
    if (e.report) {
      entry["report"] = to_json(*e.report);
    } else {
      entry["error"] = e.error;
    }
    models.push_back(entry);
  }
  j["models"] = models;
  return j;
}

std::string render(const CompareReport& report, OutputFormat format) {
  if (format == OutputFormat::json) return to_json(report).dump(2) + "\n";
  std::ostringstream out;
  if (format == OutputFormat::csv) {
    out << "corr,variance,total_reserve,total_rmse_pct,qic_hh,cic_hh,converged\n";
    for (const auto& e : report.entries) {
      out << to_string(e.correlation) << ',' << to_string(e.variance) << ',';
      if (e.report) {
        out << round_sig10(e.report->total_reserve) << ','
            << round_sig10(e.report->total_rmse_pct) << ','
            << round_sig10(e.report->criteria.qic_hh) << ','
            << round_sig10(e.report->criteria.cic_hh) << ','
            << (e.report->converged ? "true" : "false") << '\n';
      } else {
        out << ",,,," << "error: " << e.error << '\n';
      }
    }
    return out.str();
  }

  // paper-style layout: per-year reserves in thousands, then criteria rows
  const int n = report.n;
  out << "Accident";
  for (const auto& e : report.entries)
    out << "  " << model_label(e.correlation, e.variance);
  out << '\n';
  auto cell_width = [&](std::size_t k) {
    return std::max<std::size_t>(10, model_label(report.entries[k].correlation,
                                                 report.entries[k].variance).size() + 2);
  };
  for (int i = 2; i <= n; ++i) {
    char head[16];
    std::snprintf(head, sizeof(head), "i=%-6d", i);
    out << head;
    for (std::size_t k = 0; k < report.entries.size(); ++k) {
      const auto& e = report.entries[k];
      std::string value = "-";
      if (e.report) value = std::to_string(to_thousands(e.report->rows[static_cast<std::size_t>(i - 1)].reserve));
      out << std::string(cell_width(k) - value.size(), ' ') << value;
    }
    out << '\n';
  }
  auto footer = [&](const std::string& label, auto getter, int decimals) {
    out << label << std::string(8 - label.size(), ' ');
    for (std::size_t k = 0; k < report.entries.size(); ++k) {
      const auto& e = report.entries[k];
      std::string value = "-";
      if (e.report) value = fixed(getter(*e.report), decimals);
      out << std::string(cell_width(k) > value.size() ? cell_width(k) - value.size() : 1, ' ')
          << value;
    }
    out << '\n';
  };
  out << "Total   ";
  for (std::size_t k = 0; k < report.entries.size(); ++k) {
    const auto& e = report.entries[k];
    std::string value = "-";
    if (e.report) value = std::to_string(to_thousands(e.report->total_reserve));
    out << std::string(cell_width(k) - value.size(), ' ') << value;
  }
  out << '\n';
  footer("rmse%", [](const ReserveReport& r) { return r.total_rmse_pct; }, 1);
  footer("QIC_HH", [](const ReserveReport& r) { return r.criteria.qic_hh; }, 2);
  footer("CIC_HH", [](const ReserveReport& r) { return r.criteria.cic_hh; }, 2);
  for (const auto& e : report.entries) {
    if (!e.report && !e.error.empty())
      out << "error [" << model_label(e.correlation, e.variance) << "]: " << e.error << '\n';
    if (e.report && !e.report->converged)
      out << "warning [" << model_label(e.correlation, e.variance) << "]: not converged\n";
  }
  return out.str();
}

ordered_json to_json(const McSummary& summary) {
  ordered_json j;
  ordered_json spec;
  spec["n"] = summary.spec.n;
  spec["mean"] = to_string(summary.spec.mean);
  spec["variance"] = to_string(summary.spec.variance.kind());
  if (summary.spec.variance.kind() == VarianceKind::power)
    spec["power"] = num(summary.spec.variance.exponent());
  spec["corr"] = to_string(summary.spec.correlation);
  if (summary.spec.correlation == CorrelationKind::m_dependent)
    spec["m"] = summary.spec.m_order;
  spec["marginal"] = to_string(summary.spec.marginal);
  spec["theta"] = vec(summary.spec.theta);
  spec["phi"] = num(summary.spec.phi);
  spec["vartheta"] = vec(summary.spec.vartheta);
  spec["seed"] = summary.spec.seed;
  j["spec"] = spec;
  j["replications"] = summary.replications;
  j["failures"] = summary.failures;
  j["empirical_mse"] = num(summary.empirical_mse);
  j["mean_estimated_mse"] = num(summary.mean_estimated_mse);
  j["median_estimated_mse"] = num(summary.median_estimated_mse);
  j["mean_reserve_error"] = num(summary.mean_reserve_error);
  j["coverage"] = vec(summary.coverage);
  j["vartheta_mean"] = vec(summary.vartheta_mean);
  return j;
}

}  // namespace geeres
