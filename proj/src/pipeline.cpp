#include "snapnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <exception>
#include <thread>
#include <limits>

namespace snapnet {

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {
      "strong_snap_through_mbar", "strong_snap_back_mbar", "weak_snap_through_mbar",
      "weak_snap_back_mbar",      "hysteresis_ratio",      "W_in_J",
      "W_out_J",                  "tip_x_range_mm",        "tip_y_range_mm",
      "swept_area_mm2",           "speed_mm_s",            "stride_mm",
      "bl_per_s",                 "sequencing_delay_s",    "event_count",
      "mass_balance_m3"};
  return names;
}

namespace {

double range_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

std::string first_snap_element(const Scenario& sc) {
  if (sc.pv_loop) return sc.pv_loop->element;
  if (!sc.trajectory_element.empty()) return sc.trajectory_element;
  for (const auto& e : sc.network.elements) {
    if (std::holds_alternative<SnapElement>(e.model)) return e.name;
  }
  return {};
}

bool periodic(const Scenario& sc) {
  return std::any_of(sc.network.sources.begin(), sc.network.sources.end(), [](const SourceDef& s) {
    return s.source.kind != SourceKind::kVent && s.source.frequency > 0;
  });
}

void threshold_metrics(const std::vector<LobeThresholds>& all, const std::string& element,
                       std::map<std::string, double>& m) {
  for (const auto& l : all) {
    if (l.element != element) continue;
    const std::string prefix = l.lobe == Lobe::kWeak ? "weak_" : "strong_";
    if (!l.snap_through.empty()) m[prefix + "snap_through_mbar"] = units::to_mbar(l.snap_through.front());
    if (!l.snap_back.empty()) m[prefix + "snap_back_mbar"] = units::to_mbar(l.snap_back.front());
  }
}

}  // namespace

PvLoop scenario_pv_loop(const Scenario& sc, const std::vector<double>& t,
                        const std::vector<double>& p) {
  if (!sc.pv_loop) throw Error(Errc::kInvalidArgument, "scenario requests no PV loop");
  const Source* src = nullptr;
  for (const auto& s : sc.network.sources) {
    if (s.name == sc.pv_loop->source) src = &s.source;
  }
  if (!src) throw Error(Errc::kDanglingReference, "unknown source '" + sc.pv_loop->source + "'");
  std::vector<double> v(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) v[k] = injected_volume(*src, t[k]);
  return make_pv_loop(p, v);
}

RunReport run_scenario(const Scenario& sc) {
  RunReport r;
  r.trace = simulate(sc.network, sc.solver, sc.end_time());
  const Trace& tr = r.trace;
  auto& m = r.metrics;
  m["mass_balance_m3"] = mass_balance_error(tr);
  m["event_count"] = static_cast<double>(tr.events.size());

  if (sc.pv_loop) {
    try {
      r.hysteresis = loop_work(scenario_pv_loop(sc, tr.t, tr.element_pressure(sc.pv_loop->element)));
      m["W_in_J"] = r.hysteresis->w_in;
      m["W_out_J"] = r.hysteresis->w_out;
      m["hysteresis_ratio"] = r.hysteresis->ratio;
    } catch (const Error& err) {
      r.notes.push_back(std::string("pv_loop: ") + err.what());
    }
  }

  try {
    r.thresholds = detect_thresholds(tr.events);
    threshold_metrics(r.thresholds, first_snap_element(sc), m);
  } catch (const Error& err) {
    r.notes.push_back(std::string("thresholds: ") + err.what());
  }

  const bool cyclic = periodic(sc);
  const double t_end = tr.t.back();
  const double period = cyclic ? drive_period(sc.network) : 0;

  if (!sc.trajectory_element.empty()) {
    TipPath path = tip_trajectory(tr, sc.trajectory_element, *sc.kinematics);
    // A periodic drive is judged on its last full cycle.
    const TipPath cycle = cyclic ? slice(path, t_end - period, t_end) : path;
    m["tip_x_range_mm"] = units::to_mm(range_of(cycle.x));
    m["tip_y_range_mm"] = units::to_mm(range_of(cycle.y));
    try {
      m["swept_area_mm2"] = swept_area(cycle).area * 1e6;
    } catch (const Error& err) {
      r.notes.push_back(std::string("swept_area: ") + err.what());
    }
    if (!sc.gait) r.tips.push_back(std::move(path));
  }

  if (sc.gait && cyclic) {
    const double t0 = t_end - sc.gait->window_cycles * period;
    std::vector<TipPath> window;
    for (const auto& leg : sc.gait->legs) {
      r.tips.push_back(tip_trajectory(tr, leg, *sc.kinematics));
      window.push_back(slice(r.tips.back(), t0, t_end));
    }
    GaitResult g = body_displacement(window, sc.gait->contact, period);
    r.regime = classify_regime(tr, sc.network);
    g.regime = r.regime->regime;
    g.no_events = r.regime->no_events;
    if (g.no_events) r.notes.push_back("gait: drive produced no snap events");
    try {
      g.phases = phase_diagram(tr.events, period, sc.gait->legs, t0, t_end);
    } catch (const Error& err) {
      // The last cycle can end mid-activation; judge the complete ones.
      g.phases = phase_diagram(tr.events, period, sc.gait->legs, t0, t_end - period);
      r.notes.push_back("phase_diagram: last period left out (" + std::string(err.what()) + ")");
    }
    m["speed_mm_s"] = units::to_mm(g.speed);
    m["stride_mm"] = units::to_mm(g.stride);
    m["bl_per_s"] = g.bl_per_s;
    try {
      // Start at a drive reset so that both groups belong to one cycle.
      m["sequencing_delay_s"] = sequencing_delay(tr.events, element_groups(sc.network), t0 + 0.5 * period);
    } catch (const Error& err) {
      r.notes.push_back(std::string("sequencing_delay: ") + err.what());
    }
    r.gait = std::move(g);
  } else if (sc.gait) {
    r.notes.push_back("gait: scenario has no periodic drive");
  }
  return r;
}

std::vector<csv::SweepRow> run_sweep(const Scenario& sc, const std::vector<double>& freqs) {
  if (freqs.empty()) throw Error(Errc::kInvalidArgument, "empty frequency list");
  if (!sc.gait) throw Error(Errc::kInvalidArgument, "sweep needs a gait section in the scenario");
  // Runs share nothing; workers pull frequencies off a shared index and
  // rows land in request order.
  std::vector<csv::SweepRow> rows(freqs.size());
  std::vector<std::exception_ptr> failures(freqs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < freqs.size(); i = next++) {
      try {
        const RunReport rep = run_scenario(with_frequency(sc, freqs[i]));
        rows[i] = {freqs[i], rep.gait->speed, rep.gait->stride, rep.gait->regime, rep.gait->bl_per_s};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads =
      std::min<std::size_t>(freqs.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < nthreads; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return rows;
}

std::vector<double> evaluate_targets(const nlohmann::json& scenario_doc, const TargetsFile& targets,
                                     const std::vector<double>& x) {
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out(targets.problem.targets.size(), nan);
  Scenario sc;
  try {
    sc = parse_scenario(substitute(scenario_doc, targets.pointers, x));
  } catch (const Error&) {
    return out;  // parameter combination outside the feasible set
  }
  const RunReport rep = run_scenario(sc);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto it = rep.metrics.find(targets.problem.targets[i].name);
    if (it != rep.metrics.end()) out[i] = it->second;
  }
  return out;
}

FitOutcome fit_scenario(const Scenario& sc, const TargetsFile& targets) {
  for (const auto& t : targets.problem.targets) {
    const auto& names = known_metrics();
    if (std::find(names.begin(), names.end(), t.name) == names.end()) {
      throw Error(Errc::kInvalidArgument, "unknown target metric '" + t.name + "'");
    }
  }
  FitOutcome out;
  out.result = fit_parameters(targets.problem, [&](const std::vector<double>& x) {
    return evaluate_targets(sc.document, targets, x);
  });
  out.fitted = substitute(sc.document, targets.pointers, out.result.x);
  return out;
}

}  // namespace snapnet
