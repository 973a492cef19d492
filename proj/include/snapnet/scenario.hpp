#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snapnet/fit.hpp"
#include "snapnet/gait.hpp"
#include "snapnet/simulate.hpp"

namespace snapnet {

struct PvRequest {
  std::string element;  // pressure is read at this element's node
  std::string source;   // FLOW_RAMP source whose delivered volume is the abscissa
};

struct GaitRequest {
  std::vector<std::string> legs;  // snap elements, declaration order
  ContactModel contact;
  int window_cycles = 3;
};

/// A parsed scenario file. `document` keeps the original JSON so fitted
/// values can be written back in place.
struct Scenario {
  std::string name;
  Network network;
  SolverConfig solver;
  double duration = 0;  // s; 0 means cycles of the periodic drive
  int cycles = 5;
  std::optional<PvRequest> pv_loop;
  std::optional<TipKinematics> kinematics;
  std::string trajectory_element;
  std::optional<GaitRequest> gait;
  std::vector<double> sweep_freqs;  // Hz
  std::uint64_t seed = 1;
  nlohmann::json document;

  /// Simulated time span, from duration or cycles of the drive.
  double end_time() const;
};

/// Structural errors (bad JSON, missing or unknown fields, wrong types)
/// throw kParse naming the line or the JSON pointer of the field; semantic
/// ones go through validate().
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(const std::string& text);
nlohmann::json parse_json_text(const std::string& text);

std::string read_file(const std::filesystem::path& path);

/// Accepts a path or the name of a shipped preset.
std::filesystem::path resolve_scenario(const std::string& name_or_path);

/// Copy of the scenario with every periodic source set to frequency f.
Scenario with_frequency(const Scenario& sc, double f);

/// Fit problem as stored in a targets file: parameters address scenario
/// fields by JSON pointer.
struct TargetsFile {
  std::string name;
  FitProblem problem;
  std::vector<std::string> pointers;  // one per parameter
};

/// Parameters without explicit "initial" start from the scenario's value.
TargetsFile parse_targets(const nlohmann::json& doc, const nlohmann::json& scenario_doc);

/// Scenario document with the parameter values substituted.
nlohmann::json substitute(const nlohmann::json& scenario_doc, const std::vector<std::string>& pointers,
                          const std::vector<double>& values);

}  // namespace snapnet
