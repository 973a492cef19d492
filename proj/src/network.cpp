#include "snapnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace snapnet {

const NodeDef* Network::find_node(const std::string& name) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeDef& n) { return n.name == name; });
  return it == nodes.end() ? nullptr : &*it;
}

const ElementDef* Network::find_element(const std::string& name) const {
  auto it = std::find_if(elements.begin(), elements.end(),
                         [&](const ElementDef& e) { return e.name == name; });
  return it == elements.end() ? nullptr : &*it;
}

std::string_view to_string(Lobe lobe) { return lobe == Lobe::kWeak ? "weak" : "strong"; }

bool is_imposed(const Network& net, const std::string& node) {
  if (node == net.ambient) return true;
  return std::any_of(net.sources.begin(), net.sources.end(), [&](const SourceDef& s) {
    return s.node == node && is_pressure_source(s.source);
  });
}

namespace {

void check_unique(const std::vector<std::string>& names, const char* what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw Error(Errc::kInvalidArgument, std::string(what) + " with empty name");
    if (!seen.insert(n).second) {
      throw Error(Errc::kInvalidArgument, std::string("duplicate ") + what + " '" + n + "'");
    }
  }
}

template <typename T>
std::vector<std::string> names_of(const std::vector<T>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.name);
  return out;
}

void check_snap_element(const ElementDef& e, const SnapElement& s) {
  try {
    build_cubic_pv(s.weak);
    build_cubic_pv(s.strong);
  } catch (const Error& err) {
    throw Error(err.code(), "element '" + e.name + "': " + err.what());
  }
  if (!(s.weak.p_snap_through < s.strong.p_snap_through)) {
    throw Error(Errc::kInvalidElement,
                "element '" + e.name + "': weak lobe must snap through below the strong lobe");
  }
  if (!(s.weak.p_snap_back > s.strong.p_snap_back)) {
    throw Error(Errc::kInvalidElement,
                "element '" + e.name + "': weak lobe must snap back above the strong lobe");
  }
  if (!(s.tau_snap > 0) || !std::isfinite(s.tau_snap)) {
    throw Error(Errc::kInvalidElement, "element '" + e.name + "': tau_snap must be > 0");
  }
  if (!(s.base_chamber_volume >= 0)) {
    throw Error(Errc::kInvalidElement, "element '" + e.name + "': negative base chamber volume");
  }
}

}  // namespace

Network validate(const Network& net) {
  check_unique(names_of(net.nodes), "node");
  check_unique(names_of(net.edges), "edge");
  check_unique(names_of(net.elements), "element");
  check_unique(names_of(net.sources), "source");
  if (net.ambient.empty()) throw Error(Errc::kInvalidArgument, "ambient node needs a name");
  if (net.find_node(net.ambient)) {
    throw Error(Errc::kInvalidArgument,
                "node '" + net.ambient + "' clashes with the implicit ambient node");
  }
  if (net.nodes.empty()) throw Error(Errc::kInvalidArgument, "network has no nodes");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) index[net.nodes[i].name] = i;
  const std::size_t ambient = net.nodes.size();
  auto node_index = [&](const std::string& name, const std::string& owner) {
    if (name == net.ambient) return ambient;
    auto it = index.find(name);
    if (it == index.end()) {
      throw Error(Errc::kDanglingReference, owner + " references unknown node '" + name + "'");
    }
    return it->second;
  };

  for (const auto& n : net.nodes) {
    if (!(n.dead_volume >= 0) || !std::isfinite(n.dead_volume)) {
      throw Error(Errc::kInvalidArgument, "node '" + n.name + "' has invalid dead volume");
    }
  }

  // Union-find over nodes plus ambient; ambient counts only if touched.
  std::vector<std::size_t> parent(net.nodes.size() + 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  bool ambient_used = false;
  for (const auto& e : net.edges) {
    const auto a = node_index(e.from, "edge '" + e.name + "'");
    const auto b = node_index(e.to, "edge '" + e.name + "'");
    if (!(e.resistance > 0) || !std::isfinite(e.resistance)) {
      throw Error(Errc::kNonpositiveResistance, "edge '" + e.name + "' has resistance <= 0");
    }
    if (a == b) throw Error(Errc::kInvalidArgument, "edge '" + e.name + "' is a self loop");
    ambient_used = ambient_used || a == ambient || b == ambient;
    parent[root(a)] = root(b);
  }

  std::map<std::string, int> pressure_sources;
  for (const auto& s : net.sources) {
    const auto i = node_index(s.node, "source '" + s.name + "'");
    if (i == ambient) {
      throw Error(Errc::kInvalidArgument, "source '" + s.name + "' attached to the ambient node");
    }
    try {
      check_source(s.source);
    } catch (const Error& err) {
      throw Error(err.code(), "source '" + s.name + "': " + err.what());
    }
    if (is_pressure_source(s.source) && ++pressure_sources[s.node] > 1) {
      throw Error(Errc::kInvalidArgument,
                  "node '" + s.node + "' has more than one imposed pressure (source '" + s.name + "')");
    }
  }
  for (const auto& s : net.sources) {
    if (!is_pressure_source(s.source) && pressure_sources.count(s.node)) {
      throw Error(Errc::kInvalidArgument, "flow source '" + s.name + "' feeds node '" + s.node +
                                              "' whose pressure is imposed");
    }
  }

  for (const auto& e : net.elements) {
    const auto i = node_index(e.node, "element '" + e.name + "'");
    if (i == ambient || pressure_sources.count(e.node)) {
      throw Error(Errc::kInvalidElement,
                  "element '" + e.name + "' sits on node '" + e.node + "' whose pressure is imposed");
    }
    if (const auto* s = std::get_if<SnapElement>(&e.model)) {
      check_snap_element(e, *s);
    } else {
      const auto& c = std::get<Capacitance>(e.model);
      if (!(c.volume > 0) || !std::isfinite(c.volume)) {
        throw Error(Errc::kInvalidElement, "capacitance '" + e.name + "' needs volume > 0");
      }
    }
  }

  const std::size_t r0 = root(0);
  for (std::size_t i = 1; i < net.nodes.size(); ++i) {
    if (root(i) != r0) {
      throw Error(Errc::kDisconnectedGraph,
                  "node '" + net.nodes[i].name + "' is not connected to node '" + net.nodes[0].name + "'");
    }
  }
  if (ambient_used && root(ambient) != r0) {
    throw Error(Errc::kDisconnectedGraph, "ambient node is not connected");
  }

  // A free node must hold some gas or its pressure is undefined.
  for (const auto& n : net.nodes) {
    if (is_imposed(net, n.name)) continue;
    double volume = n.dead_volume;
    for (const auto& e : net.elements) {
      if (e.node != n.name) continue;
      if (const auto* s = std::get_if<SnapElement>(&e.model)) {
        volume += s->base_chamber_volume + s->weak.v_closed + s->strong.v_closed;
      } else {
        volume += std::get<Capacitance>(e.model).volume;
      }
    }
    if (!(volume > 0)) {
      throw Error(Errc::kInvalidArgument, "node '" + n.name + "' has zero gas volume");
    }
  }
  return net;
}

}  // namespace snapnet
