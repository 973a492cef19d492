#pragma once

#include <string>

#include "snapnet/scenario.hpp"

namespace snapnet::test {

inline Scenario preset(const std::string& name) {
  return parse_scenario_text(read_file(resolve_scenario(name)));
}

inline std::string targets_path(const std::string& name) {
  return std::string(SNAPNET_TARGETS_DIR) + "/" + name + ".json";
}

/// Capacitances in series behind a pressure step: supply -R1- a [-R2- b].
inline Network rc_chain(double p_in, double r1, double v1, double r2 = 0, double v2 = 0) {
  Network net;
  net.nodes = {{"supply", 0}, {"a", 0}};
  net.edges = {{"r1", "supply", "a", r1}};
  net.elements = {{"ca", "a", "", Capacitance{v1}}};
  if (r2 > 0) {
    net.nodes.push_back({"b", 0});
    net.edges.push_back({"r2", "a", "b", r2});
    net.elements.push_back({"cb", "b", "", Capacitance{v2}});
  }
  net.sources = {{"step", "supply", Source{SourceKind::kPressureRampWave, p_in, 0, 0, 0}}};
  return net;
}

}  // namespace snapnet::test
