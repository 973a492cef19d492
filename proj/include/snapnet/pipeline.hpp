#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snapnet/analysis.hpp"
#include "snapnet/csv.hpp"
#include "snapnet/scenario.hpp"

namespace snapnet {

/// Everything one scenario run produces. Metrics that do not apply to the
/// scenario (or failed, see notes) are absent.
struct RunReport {
  Trace trace;
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;
  std::optional<HysteresisReport> hysteresis;
  std::vector<LobeThresholds> thresholds;
  std::vector<TipPath> tips;
  std::optional<GaitResult> gait;
  std::optional<RegimeReport> regime;
};

RunReport run_scenario(const Scenario& sc);

/// PV loop from the pressure at the requested element's node against the
/// volume its flow source has delivered by each time.
PvLoop scenario_pv_loop(const Scenario& sc, const std::vector<double>& t,
                        const std::vector<double>& p);

/// Speed, stride and regime per frequency, in the given order.
std::vector<csv::SweepRow> run_sweep(const Scenario& sc, const std::vector<double>& freqs);

/// Metric values for the targets at parameter vector x. Parameter vectors
/// that make the scenario invalid yield NaN metrics; solver failures throw.
std::vector<double> evaluate_targets(const nlohmann::json& scenario_doc, const TargetsFile& targets,
                                     const std::vector<double>& x);

struct FitOutcome {
  FitResult result;
  nlohmann::json fitted;  // scenario document with the best point substituted
};

FitOutcome fit_scenario(const Scenario& sc, const TargetsFile& targets);

/// Names accepted as fit targets.
const std::vector<std::string>& known_metrics();

}  // namespace snapnet
