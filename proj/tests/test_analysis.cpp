#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snapnet/pipeline.hpp"
#include "support.hpp"

using namespace snapnet;
using snapnet::test::preset;

namespace {

struct Samples {
  std::vector<double> p, v;
};

// Ellipse traversed with volume rising over the upper half.
Samples ellipse(double a, double b, int n) {
  Samples s;
  for (int k = 0; k <= n; ++k) {
    const double th = 2 * std::numbers::pi * k / n;
    s.v.push_back(1e-6 - a * std::cos(th));
    s.p.push_back(3000 + b * std::sin(th));
  }
  return s;
}

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::kInvalidArgument;
}

}  // namespace

TEST_CASE("ellipse loop encloses pi a b") {
  const double a = 2e-7, b = 800;
  const Samples s = ellipse(a, b, 10000);
  const HysteresisReport h = loop_work(make_pv_loop(s.p, s.v));
  CHECK(h.w_in - h.w_out == doctest::Approx(std::numbers::pi * a * b).epsilon(1e-4));
  CHECK(h.ratio == doctest::Approx((h.w_in - h.w_out) / h.w_in).epsilon(1e-15));
}

TEST_CASE("retracing the loading curve dissipates nothing") {
  std::vector<double> p, v;
  for (int k = 0; k <= 100; ++k) {
    v.push_back(k * 1e-9);
    p.push_back(std::sqrt(k) * 100);
  }
  for (int k = 99; k >= 0; --k) {
    v.push_back(k * 1e-9);
    p.push_back(std::sqrt(k) * 100);
  }
  const HysteresisReport h = loop_work(make_pv_loop(p, v));
  CHECK(h.w_in == doctest::Approx(h.w_out).epsilon(1e-14));
  CHECK(std::abs(h.ratio) < 1e-12);
}

TEST_CASE("reversed traversal swaps the work terms") {
  const Samples s = ellipse(2e-7, 800, 2000);
  const HysteresisReport fwd = loop_work(make_pv_loop(s.p, s.v));
  const std::vector<double> rp(s.p.rbegin(), s.p.rend()), rv(s.v.rbegin(), s.v.rend());
  const HysteresisReport rev = loop_work(make_pv_loop(rp, rv));
  CHECK(rev.w_in == doctest::Approx(fwd.w_out).epsilon(1e-12));
  CHECK(rev.w_out == doctest::Approx(fwd.w_in).epsilon(1e-12));
}

TEST_CASE("hysteresis ratio ignores uniform rescaling") {
  const Scenario sc = preset("single_dome");
  const Trace tr = simulate(sc.network, sc.solver, sc.end_time());
  const PvLoop loop = scenario_pv_loop(sc, tr.t, tr.element_pressure("dome"));
  const double h = loop_work(loop).ratio;
  CHECK(h == doctest::Approx(0.366).epsilon(0.02 / 0.366));

  PvLoop scaled = loop;
  for (auto* series : {&scaled.load_p, &scaled.unload_p}) {
    for (double& x : *series) x *= 3.7;
  }
  CHECK(loop_work(scaled).ratio == doctest::Approx(h).epsilon(1e-12));
  scaled = loop;
  for (auto* series : {&scaled.load_v, &scaled.unload_v}) {
    for (double& x : *series) x *= 0.2;
  }
  CHECK(loop_work(scaled).ratio == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("loop halves must be monotone") {
  PvLoop bad;
  bad.load_v = {0, 2, 1, 3};
  bad.load_p = {0, 1, 2, 3};
  bad.unload_v = {3, 0};
  bad.unload_p = {3, 0};
  CHECK(code_of([&] { loop_work(bad); }) == Errc::kNonmonotoneSegment);
}

TEST_CASE("thresholds from simulated events") {
  const Scenario sc = preset("single_dome");
  const Trace tr = simulate(sc.network, sc.solver, sc.end_time());
  const auto th = detect_thresholds(tr.events);
  REQUIRE(th.size() == 2);
  const auto& p = tr.element_pressure("dome");

  // Each event pressure lies within two dt_min worth of pressure change of its fold.
  for (const auto& ev : tr.events) {
    const auto& col = tr.lobes[tr.lobe_index(ev.element, ev.lobe)];
    const double fold = ev.kind == SnapKind::kSnapThrough ? col.spec.p_snap_through : col.spec.p_snap_back;
    std::size_t k = 1;
    while (k + 1 < tr.samples() && tr.t[k] < ev.t) ++k;
    double rate = 0;
    for (std::size_t j = k > 5 ? k - 5 : 1; j <= k; ++j) {
      rate = std::max(rate, std::abs(p[j] - p[j - 1]) / (tr.t[j] - tr.t[j - 1]));
    }
    CAPTURE(ev.t);
    CHECK(std::abs(ev.pressure - fold) <= 2 * rate * sc.solver.dt_min);
  }
  CHECK(units::to_mbar(th[1].snap_through.front()) == doctest::Approx(41).epsilon(1.0 / 41));
  CHECK(std::abs(units::to_mbar(th[1].snap_back.front())) <= 2);
}

TEST_CASE("reversible networks have no thresholds") {
  const Trace tr = simulate(test::rc_chain(5000, 1e10, 1e-6), {}, 0.1);
  CHECK(code_of([&] { detect_thresholds(tr.events); }) == Errc::kNoEvents);
}

TEST_CASE("thresholds from a pressure-only log") {
  const Scenario sc = preset("single_dome");
  const Trace tr = simulate(sc.network, sc.solver, sc.end_time());
  const auto& p = tr.element_pressure("dome");

  // Resample to a 1 kHz sensor log by linear interpolation.
  PressureLog log;
  std::size_t k = 0;
  for (double t = 0; t <= tr.t.back(); t += 1e-3) {
    while (k + 1 < tr.samples() && tr.t[k + 1] < t) ++k;
    const double w = (t - tr.t[k]) / (tr.t[k + 1] - tr.t[k]);
    log.t.push_back(t);
    log.p.push_back(p[k] + w * (p[k + 1] - p[k]));
  }
  const LogThresholds th = detect_thresholds(log);
  REQUIRE_FALSE(th.snap_through.empty());
  const double main = *std::max_element(th.snap_through.begin(), th.snap_through.end());
  // The true fold falls between two log samples; the reading is the last one before the drop.
  const double ramp_step = 5.0;  // Pa per sample on the loading ramp, generous bound
  CHECK(main <= 4100 + 1);
  CHECK(main >= 4100 - ramp_step);
  REQUIRE_FALSE(th.snap_back.empty());
  CHECK(std::abs(th.snap_back.back()) < 200);

  PressureLog flat{{0, 1, 2, 3}, {0, 1, 2, 3}};
  CHECK(code_of([&] { detect_thresholds(flat); }) == Errc::kNoEvents);
}

TEST_CASE("sequencing delay") {
  const Scenario sc = preset("quadruped_1hz");
  const Trace tr = simulate(sc.network, sc.solver, 1.0);
  const auto groups = element_groups(sc.network);
  CHECK(sequencing_delay(tr.events, groups) > 0);

  std::vector<SnapEvent> rear_only;
  for (const auto& e : tr.events) {
    if (groups.at(e.element) == "rear") rear_only.push_back(e);
  }
  CHECK(code_of([&] { sequencing_delay(rear_only, groups); }) == Errc::kMissingGroupEvent);
}
