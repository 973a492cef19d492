#pragma once

#include <string>
#include <variant>
#include <vector>

#include "snapnet/elements.hpp"

namespace snapnet {

struct NodeDef {
  std::string name;
  double dead_volume = 0;  // m^3 of gas not owned by any element
};

struct EdgeDef {
  std::string name;
  std::string from;
  std::string to;
  double resistance = 0;  // Pa s / m^3
};

/// Two-lobe dome sharing one cavity pressure.
struct SnapElement {
  SnapSpec<double> weak;
  SnapSpec<double> strong;
  double tau_snap = 5e-3;
  double base_chamber_volume = units::kDefaultChamberVolume;
};

/// Fixed gas volume attached to a node.
struct Capacitance {
  double volume = 0;
};

struct ElementDef {
  std::string name;
  std::string node;
  std::string group;  // "rear" / "front" for the gait analysis, free otherwise
  std::variant<SnapElement, Capacitance> model;
};

struct SourceDef {
  std::string name;
  std::string node;
  Source source;
};

/// Pressure nodes joined by linear resistances. The ambient node is implicit
/// (gauge 0) and only needs to appear as an edge endpoint. Nodes carrying a
/// pressure source or a vent have their pressure imposed.
struct Network {
  std::string ambient = "ambient";
  std::vector<NodeDef> nodes;
  std::vector<EdgeDef> edges;
  std::vector<ElementDef> elements;
  std::vector<SourceDef> sources;

  const NodeDef* find_node(const std::string& name) const;
  const ElementDef* find_element(const std::string& name) const;
};

enum class Lobe { kWeak, kStrong };

std::string_view to_string(Lobe lobe);

/// Checks the network invariants and returns it with a stable ordering:
/// nodes, edges, elements and sources in declaration order. Errors name the
/// offending entity.
Network validate(const Network& net);

/// True when a source fixes the node's pressure.
bool is_imposed(const Network& net, const std::string& node);

}  // namespace snapnet
