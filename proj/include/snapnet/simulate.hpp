#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snapnet/network.hpp"

namespace snapnet {

struct SolverConfig {
  double dt_min = 1e-5;  // s
  double dt_max = 1e-4;  // s
  double rtol = 1e-7;
  double atol = 1e-13;  // m^3 of gas
  long max_steps = 5'000'000;
  double tau_snap_override = 0;  // s, 0 keeps each element's own value
};

void check_config(const SolverConfig& cfg);

enum class SnapKind { kSnapThrough, kSnapBack };

std::string_view to_string(SnapKind kind);

struct SnapEvent {
  double t = 0;
  std::string element;
  Lobe lobe = Lobe::kWeak;
  SnapKind kind = SnapKind::kSnapThrough;
  double pressure = 0;  // node gauge pressure at the event, Pa
};

/// One lobe column of a trace.
struct LobeSeries {
  std::string element;
  std::string node;
  std::string group;
  Lobe lobe = Lobe::kWeak;
  SnapSpec<double> spec;
  std::vector<double> volume;         // m^3
  std::vector<std::uint8_t> snapped;  // 0 pre-snap, 1 post-snap
};

/// Simulation record, one entry per accepted integrator step.
struct Trace {
  std::vector<double> t;
  std::vector<std::string> node_names;           // declaration order
  std::vector<std::vector<double>> pressure;     // [node][sample], gauge Pa
  std::vector<LobeSeries> lobes;                 // element order, weak before strong
  std::vector<double> injected;                  // m^3 of ambient-referenced gas
  std::vector<double> vented;                    // m^3
  std::vector<double> stored;                    // m^3, isothermal gas content of free nodes
  std::vector<SnapEvent> events;

  std::size_t samples() const { return t.size(); }
  std::size_t node_index(const std::string& name) const;
  std::size_t lobe_index(const std::string& element, Lobe lobe) const;
  /// Pressure series of the node carrying the element.
  const std::vector<double>& element_pressure(const std::string& element) const;
};

/// Integrates the network from rest (all gauge pressures 0, lobes at their
/// pre-snap rest volume) to t_end with an adaptive TR-BDF2 scheme.
///
/// Gas in each free node obeys isothermal storage m = V (p + p_atm) / p_atm
/// with m counted in ambient-referenced volume; edges carry (p_a - p_b) / R.
/// Lobes relax towards their branch equilibrium with time constant tau_snap
/// and switch branch when their node pressure passes the fold.
Trace simulate(const Network& net, const SolverConfig& cfg, double t_end);

/// Events sorted by time, ties by lobe column order.
std::vector<SnapEvent> detect_snap_events(const Trace& trace);

/// Largest |injected - vented - (stored - stored[0])| over all samples.
double mass_balance_error(const Trace& trace);

}  // namespace snapnet
