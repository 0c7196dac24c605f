#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gee_reserve/prediction.hpp"
#include "gee_reserve/simulate.hpp"

namespace geeres {

enum class OutputFormat { table, json, csv };

/// Round to 10 significant decimal digits; keeps emitted JSON free of
/// representation noise while round-tripping exactly.
double round_sig10(double x);

nlohmann::ordered_json to_json(const ReserveReport& report);
std::string render(const ReserveReport& report, OutputFormat format);

/// Result of the six-model sweep (ind/exch/ar1 x linear/quadratic).
struct CompareEntry {
  CorrelationKind correlation = CorrelationKind::independence;
  VarianceKind variance = VarianceKind::linear;
  std::optional<ReserveReport> report;
  std::string error;  // set when the fit failed
};

struct CompareReport {
  int n = 0;
  std::vector<CompareEntry> entries;
};

nlohmann::ordered_json to_json(const CompareReport& report);
std::string render(const CompareReport& report, OutputFormat format);

nlohmann::ordered_json to_json(const McSummary& summary);

}  // namespace geeres
