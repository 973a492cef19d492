#include "snapnet/gait.hpp"

#include <algorithm>
#include <cmath>

namespace snapnet {

std::string_view to_string(Regime regime) {
  return regime == Regime::kWalking ? "WALKING" : "JUMP_LIKE";
}

TipPath tip_trajectory(const Trace& trace, const std::string& element, const TipKinematics& kin) {
  if (!(kin.pillar_length > 0) || !std::isfinite(kin.lateral_gain) ||
      !std::isfinite(kin.vertical_gain)) {
    throw Error(Errc::kInvalidArgument, "tip kinematics need finite gains and pillar_length > 0");
  }
  const auto& weak = trace.lobes[trace.lobe_index(element, Lobe::kWeak)];
  const auto& strong = trace.lobes[trace.lobe_index(element, Lobe::kStrong)];
  const PvLaw pw = build_cubic_pv(weak.spec);
  const PvLaw ps = build_cubic_pv(strong.spec);

  TipPath path;
  path.leg = element;
  path.t = trace.t;
  path.x.resize(trace.samples());
  path.y.resize(trace.samples());
  for (std::size_t k = 0; k < trace.samples(); ++k) {
    const double ww = pw.deflection(weak.volume[k]);
    const double ws = ps.deflection(strong.volume[k]);
    path.x[k] = kin.lateral_gain * (ww - ws);
    path.y[k] = -kin.vertical_gain * 0.5 * (ww + ws);
  }
  return path;
}

TipPath slice(const TipPath& path, double t0, double t1) {
  TipPath out;
  out.leg = path.leg;
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    if (path.t[k] < t0 || path.t[k] > t1) continue;
    out.t.push_back(path.t[k]);
    out.x.push_back(path.x[k]);
    out.y.push_back(path.y[k]);
  }
  return out;
}

SweptArea swept_area(const TipPath& path, double closure_fraction) {
  const std::size_t n = path.x.size();
  if (n < 3) throw Error(Errc::kOpenPath, "path '" + path.leg + "' has fewer than 3 samples");
  const auto [xmin, xmax] = std::minmax_element(path.x.begin(), path.x.end());
  const auto [ymin, ymax] = std::minmax_element(path.y.begin(), path.y.end());
  const double diag = std::hypot(*xmax - *xmin, *ymax - *ymin);
  const double gap = std::hypot(path.x[n - 1] - path.x[0], path.y[n - 1] - path.y[0]);
  if (gap > closure_fraction * diag) {
    throw Error(Errc::kOpenPath, "path '" + path.leg + "' does not close: endpoint gap is " +
                                     std::to_string(gap / diag * 100) + "% of its extent");
  }
  // Coordinates relative to the first vertex keep the sum well conditioned.
  double twice = 0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double ax = path.x[k] - path.x[0], ay = path.y[k] - path.y[0];
    const double bx = path.x[k + 1] - path.x[0], by = path.y[k + 1] - path.y[0];
    twice += ax * by - bx * ay;
  }
  return {std::abs(twice) / 2, twice >= 0};
}

GaitResult body_displacement(const std::vector<TipPath>& paths, const ContactModel& contact,
                             double period) {
  if (paths.empty()) throw Error(Errc::kInvalidArgument, "no tip paths");
  if (!(period > 0)) throw Error(Errc::kInvalidArgument, "period must be > 0");
  const auto& grid = paths.front().t;
  for (const auto& p : paths) {
    if (p.t != grid || p.x.size() != grid.size() || p.y.size() != grid.size()) {
      throw Error(Errc::kGridMismatch, "path '" + p.leg + "' is not on the common time grid");
    }
  }
  GaitResult g;
  if (grid.empty()) return g;
  g.t = grid;
  g.body.assign(grid.size(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    double push = 0;
    int sticking = 0;
    for (const auto& p : paths) {
      const double dx = p.x[k] - p.x[k - 1];
      const bool grounded = p.y[k - 1] <= contact.contact_height && p.y[k] <= contact.contact_height;
      if (grounded && dx < 0) {
        push -= dx;
        ++sticking;
      }
    }
    g.body[k] = g.body[k - 1] + (sticking ? push / sticking : 0.0);
  }
  g.duration = grid.back() - grid.front();
  if (g.duration > 0) {
    g.speed = g.body.back() / g.duration;
    g.stride = g.speed * period;
  }
  g.bl_per_s = g.speed / units::kBodyLength;
  return g;
}

double drive_period(const Network& net) {
  for (const auto& s : net.sources) {
    if (s.source.kind != SourceKind::kVent && s.source.frequency > 0) return 1.0 / s.source.frequency;
  }
  throw Error(Errc::kInvalidArgument, "network has no periodic source");
}

RegimeReport classify_regime(const Trace& trace, const Network& net) {
  const double period = drive_period(net);
  if (trace.samples() == 0) throw Error(Errc::kTooShort, "empty trace");
  const double t_end = trace.t.back();
  if (t_end - trace.t.front() < 3 * period * (1 - 1e-9)) {
    throw Error(Errc::kTooShort, "trace covers fewer than 3 drive periods");
  }
  const double t0 = t_end - period;
  int rear = 0, front = 0;
  for (const auto& ev : trace.events) {
    if (ev.t < t0 || ev.lobe != Lobe::kStrong || ev.kind != SnapKind::kSnapThrough) continue;
    const auto* e = net.find_element(ev.element);
    if (!e) continue;
    if (e->group == "rear") ++rear;
    if (e->group == "front") ++front;
  }
  RegimeReport r;
  r.no_events = trace.events.empty();
  r.regime = (front == 0 && rear > 0) ? Regime::kJumpLike : Regime::kWalking;
  return r;
}

std::vector<LegPhase> phase_diagram(const std::vector<SnapEvent>& events, double period,
                                    const std::vector<std::string>& legs, double t_start,
                                    double t_stop) {
  if (!(period > 0)) throw Error(Errc::kInvalidArgument, "period must be > 0");
  auto fraction = [&](double t) {
    const double c = t / period;
    return c - std::floor(c);
  };
  std::vector<LegPhase> out;
  for (const auto& leg : legs) {
    LegPhase lp{leg, {}};
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& on = events[i];
      if (on.element != leg || on.lobe != Lobe::kStrong || on.kind != SnapKind::kSnapThrough) continue;
      if (on.t < t_start || on.t >= t_stop) continue;
      const SnapEvent* off = nullptr;
      for (std::size_t j = i + 1; j < events.size() && !off; ++j) {
        const auto& e = events[j];
        if (e.element == leg && e.lobe == Lobe::kStrong && e.kind == SnapKind::kSnapBack) off = &e;
      }
      if (!off) {
        throw Error(Errc::kUnpairedEvent, "snap-through of '" + leg + "' at t = " +
                                              std::to_string(on.t) + " s has no snap-back");
      }
      lp.intervals.push_back({fraction(on.t), fraction(off->t)});
    }
    out.push_back(std::move(lp));
  }
  return out;
}

}  // namespace snapnet
