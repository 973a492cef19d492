#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "snapnet/pipeline.hpp"
#include "support.hpp"

using namespace snapnet;
using snapnet::test::preset;
using snapnet::test::rc_chain;

namespace {

Errc code_of(const Network& net) {
  try {
    validate(net);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("network unexpectedly valid");
  return Errc::kInvalidArgument;
}

double max_pressure(const Trace& tr, const std::string& node, double t0) {
  const auto& p = tr.pressure[tr.node_index(node)];
  double m = -INFINITY;
  for (std::size_t k = 0; k < tr.samples(); ++k) {
    if (tr.t[k] >= t0) m = std::max(m, p[k]);
  }
  return m;
}

Scenario with_bridge(Scenario sc, double r) {
  for (auto& e : sc.network.edges) {
    if (e.name == "bridge") e.resistance = r;
  }
  return sc;
}

double bridge_resistance(const Scenario& sc) {
  for (const auto& e : sc.network.edges) {
    if (e.name == "bridge") return e.resistance;
  }
  return 0;
}

}  // namespace

TEST_CASE("validate") {
  const Scenario quad = preset("quadruped_1hz");
  CHECK_NOTHROW(validate(quad.network));

  SUBCASE("dangling edge") {
    Network net = quad.network;
    net.edges.push_back({"stray", "rear", "nowhere", 1e9});
    CHECK(code_of(net) == Errc::kDanglingReference);
  }
  SUBCASE("element on unknown node") {
    Network net = quad.network;
    net.elements[0].node = "nowhere";
    CHECK(code_of(net) == Errc::kDanglingReference);
  }
  SUBCASE("non-positive resistance") {
    Network net = quad.network;
    net.edges[0].resistance = 0;
    CHECK(code_of(net) == Errc::kNonpositiveResistance);
  }
  SUBCASE("island") {
    Network net = quad.network;
    net.nodes.push_back({"island", 1e-6});
    CHECK(code_of(net) == Errc::kDisconnectedGraph);
  }
  SUBCASE("weak lobe must snap first and recover first") {
    Network net = quad.network;
    auto& el = std::get<SnapElement>(net.elements[0].model);
    std::swap(el.weak, el.strong);
    CHECK(code_of(net) == Errc::kInvalidElement);
  }
  SUBCASE("single node behind a vent") {
    Network net;
    net.nodes = {{"cup", 1e-6}, {"out", 0}};
    net.edges = {{"leak", "cup", "out", 1e9}};
    net.sources = {{"vent", "out", Source{SourceKind::kVent, 0, 0, 0, 0}}};
    CHECK_NOTHROW(validate(net));
    const Trace tr = simulate(net, {}, 0.01);
    CHECK(tr.events.empty());
  }
}

TEST_CASE("single chamber step response") {
  const double p_in = 50000, r = 1e10, v = 1e-6;
  const double tau = r * v / units::kAtmosphere;
  const Trace tr = simulate(rc_chain(p_in, r, v), {}, 5 * tau);
  const auto& p = tr.pressure[tr.node_index("a")];
  double worst = 0;
  for (std::size_t k = 0; k < tr.samples(); ++k) {
    const double exact = p_in * (1 - std::exp(-tr.t[k] / tau));
    worst = std::max(worst, std::abs(p[k] - exact) / p_in);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("two chamber step response against the eigen solution") {
  const double p_in = 50000, r1 = 1e10, r2 = 3e10, v1 = 1e-6, v2 = 0.5e-6;
  const double ca = v1 / units::kAtmosphere, cb = v2 / units::kAtmosphere;
  const double g1 = 1 / r1, g2 = 1 / r2;

  // Deviation e = p - p_in obeys e' = A e with e(0) = (-p_in, -p_in).
  const double a11 = -(g1 + g2) / ca, a12 = g2 / ca, a21 = g2 / cb, a22 = -g2 / cb;
  const double tr_a = a11 + a22, det = a11 * a22 - a12 * a21;
  const double disc = std::sqrt(tr_a * tr_a / 4 - det);
  const double l1 = tr_a / 2 + disc, l2 = tr_a / 2 - disc;
  // Eigenvectors (a12, l - a11).
  const double x1 = a12, y1 = l1 - a11, x2 = a12, y2 = l2 - a11;
  const double d = x1 * y2 - x2 * y1;
  const double k1 = (-p_in * y2 + p_in * x2) / d;
  const double k2 = (-x1 * p_in + y1 * p_in) / d;

  const double t_end = 6 / std::min(std::abs(l1), std::abs(l2));
  const Trace tr = simulate(rc_chain(p_in, r1, v1, r2, v2), {}, t_end);
  const auto& pa = tr.pressure[tr.node_index("a")];
  const auto& pb = tr.pressure[tr.node_index("b")];
  double worst = 0;
  for (std::size_t k = 0; k < tr.samples(); ++k) {
    const double t = tr.t[k];
    const double ea = k1 * x1 * std::exp(l1 * t) + k2 * x2 * std::exp(l2 * t);
    const double eb = k1 * y1 * std::exp(l1 * t) + k2 * y2 * std::exp(l2 * t);
    worst = std::max({worst, std::abs(pa[k] - (p_in + ea)) / p_in, std::abs(pb[k] - (p_in + eb)) / p_in});
  }
  CHECK(worst < 1e-6);
  CHECK(mass_balance_error(tr) < 1e-15);
}

TEST_CASE("zero drive stays at rest") {
  Scenario sc = preset("single_dome");
  sc.network.sources[0].source.amplitude = 0;
  const Trace tr = simulate(sc.network, sc.solver, 1.0);
  CHECK(tr.events.empty());
  for (const auto& series : tr.pressure) {
    for (double p : series) CHECK(std::abs(p) < 1e-9);
  }
}

TEST_CASE("single dome cycle") {
  const Scenario sc = preset("single_dome");
  const Trace tr = simulate(sc.network, sc.solver, sc.end_time());

  CHECK(std::is_sorted(tr.t.begin(), tr.t.end()));
  CHECK(std::adjacent_find(tr.t.begin(), tr.t.end()) == tr.t.end());
  CHECK(mass_balance_error(tr) <= 1e-9);

  // Weak then strong snap-through, weak then strong snap-back.
  REQUIRE(tr.events.size() == 4);
  CHECK(tr.events[0].lobe == Lobe::kWeak);
  CHECK(tr.events[0].kind == SnapKind::kSnapThrough);
  CHECK(tr.events[1].lobe == Lobe::kStrong);
  CHECK(tr.events[1].kind == SnapKind::kSnapThrough);
  CHECK(tr.events[2].lobe == Lobe::kWeak);
  CHECK(tr.events[2].kind == SnapKind::kSnapBack);
  CHECK(tr.events[3].lobe == Lobe::kStrong);
  CHECK(tr.events[3].kind == SnapKind::kSnapBack);

  // Sharp drop after the main snap, within the reported threshold band.
  const double p_snap = tr.events[1].pressure;
  CHECK(p_snap >= 3600);
  CHECK(p_snap <= 4100 + 1);
  const auto& p = tr.element_pressure("dome");
  double p_after = INFINITY;
  for (std::size_t k = 0; k < tr.samples(); ++k) {
    if (tr.t[k] > tr.events[1].t && tr.t[k] < tr.events[1].t + 0.05) p_after = std::min(p_after, p[k]);
  }
  CHECK(p_after < p_snap - 500);
}

TEST_CASE("no source, no events") {
  Scenario sc = preset("single_dome");
  sc.network.sources.clear();
  sc.network.edges.push_back({"leak", "line", "ambient", 1e9});
  const Trace tr = simulate(sc.network, sc.solver, 0.2);
  CHECK(tr.events.empty());
}

TEST_CASE("simulation is deterministic") {
  const Scenario sc = preset("quadruped_1hz");
  const Trace a = simulate(sc.network, sc.solver, 2.0);
  const Trace b = simulate(sc.network, sc.solver, 2.0);
  CHECK(a.t == b.t);
  CHECK(a.pressure == b.pressure);
  REQUIRE(a.lobes.size() == b.lobes.size());
  for (std::size_t j = 0; j < a.lobes.size(); ++j) {
    CHECK(a.lobes[j].volume == b.lobes[j].volume);
    CHECK(a.lobes[j].snapped == b.lobes[j].snapped);
  }
}

TEST_CASE("shipped presets conserve gas") {
  for (const char* name : {"single_dome", "quadruped_1hz", "freq_sweep"}) {
    CAPTURE(name);
    const Scenario sc = preset(name);
    const Trace tr = simulate(sc.network, sc.solver, sc.end_time());
    CHECK(mass_balance_error(tr) <= 1e-9);
  }
}

TEST_CASE("refining tolerances moves events by less than two dt_min") {
  for (const char* name : {"single_dome", "quadruped_1hz"}) {
    CAPTURE(name);
    const Scenario sc = preset(name);
    SolverConfig fine = sc.solver;
    fine.rtol /= 10;
    fine.atol /= 10;
    const Trace a = simulate(sc.network, sc.solver, sc.end_time());
    const Trace b = simulate(sc.network, fine, sc.end_time());
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].element == b.events[i].element);
      CHECK(std::abs(a.events[i].t - b.events[i].t) < 2 * sc.solver.dt_min);
    }
  }
}

TEST_CASE("quadruped inflates rear first and releases rear first") {
  const Scenario sc = preset("quadruped_1hz");
  const Trace tr = simulate(sc.network, sc.solver, 1.0);
  const auto groups = element_groups(sc.network);
  auto first = [&](const std::string& group, SnapKind kind) {
    for (const auto& e : tr.events) {
      if (e.lobe == Lobe::kStrong && e.kind == kind && groups.at(e.element) == group) return e.t;
    }
    return std::numeric_limits<double>::infinity();
  };
  CHECK(first("rear", SnapKind::kSnapThrough) < first("front", SnapKind::kSnapThrough));
  CHECK(first("rear", SnapKind::kSnapBack) < first("front", SnapKind::kSnapBack));
  CHECK(std::isfinite(first("front", SnapKind::kSnapBack)));
}

TEST_CASE("sequencing delay grows with bridge resistance") {
  const Scenario sc = preset("quadruped_1hz");
  const double r0 = bridge_resistance(sc);
  auto delay = [&](double r) {
    const Scenario s = with_bridge(sc, r);
    const Trace tr = simulate(s.network, s.solver, 1.0);
    return sequencing_delay(tr.events, element_groups(s.network));
  };
  double last = -INFINITY;
  for (double f : {0.25, 0.5, 1.0, 1.5, 2.0}) {
    const double d = delay(f * r0);
    CAPTURE(f);
    CHECK(d > last);
    last = d;
  }
  // Nearly shorted bridge: the groups share one pressure until the first
  // snap. The remaining delay is the refill after the rear snap's pressure
  // dip, so it shrinks but does not vanish.
  const Scenario shorted = with_bridge(sc, r0 / 100);
  const Trace tr = simulate(shorted.network, shorted.solver, 1.0);
  const auto& rear = tr.pressure[tr.node_index("rear")];
  const auto& front = tr.pressure[tr.node_index("front")];
  double gap = 0, peak = 0;
  for (std::size_t k = 0; k < tr.samples() && tr.t[k] < tr.events.front().t; ++k) {
    gap = std::max(gap, std::abs(rear[k] - front[k]));
    peak = std::max(peak, rear[k]);
  }
  CHECK(gap < 0.01 * peak);
  CHECK(delay(r0 / 100) < delay(r0));
}

TEST_CASE("front node peak pressure falls with drive frequency") {
  const Scenario sc = preset("quadruped_1hz");
  double last = INFINITY;
  for (double f : {1.0, 2.0, 3.0, 4.0, 5.5, 7.5}) {
    const Scenario s = with_frequency(sc, f);
    const Trace tr = simulate(s.network, s.solver, s.end_time());
    const double peak = max_pressure(tr, "front", s.end_time() - 2 / f);
    CAPTURE(f);
    CHECK(peak <= last);
    last = peak;
  }
}

TEST_CASE("solver limits") {
  const Scenario sc = preset("single_dome");
  SolverConfig cfg = sc.solver;
  cfg.max_steps = 10;
  try {
    simulate(sc.network, cfg, 1.0);
    FAIL("expected STEP_FAILURE");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kStepFailure);
  }
  cfg = sc.solver;
  cfg.dt_min = 2 * cfg.dt_max;
  CHECK_THROWS_AS(simulate(sc.network, cfg, 1.0), Error);
  CHECK_THROWS_AS(simulate(sc.network, sc.solver, -1.0), Error);
}
