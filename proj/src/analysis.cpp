#include "snapnet/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace snapnet {

PvLoop make_pv_loop(const std::vector<double>& p, const std::vector<double>& v) {
  if (p.size() != v.size() || p.size() < 3) {
    throw Error(Errc::kInvalidArgument, "PV loop needs at least 3 paired samples");
  }
  const auto split = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  PvLoop loop;
  loop.load_p.assign(p.begin(), p.begin() + static_cast<long>(split) + 1);
  loop.load_v.assign(v.begin(), v.begin() + static_cast<long>(split) + 1);
  loop.unload_p.assign(p.begin() + static_cast<long>(split), p.end());
  loop.unload_v.assign(v.begin() + static_cast<long>(split), v.end());
  return loop;
}

namespace {

// Trapezoid of p dv; sign follows the direction of travel.
double trapezoid(const std::vector<double>& p, const std::vector<double>& v, double direction,
                 const char* name) {
  if (p.size() != v.size()) throw Error(Errc::kInvalidArgument, "PV segment size mismatch");
  double span = 0;
  for (std::size_t k = 1; k < v.size(); ++k) span = std::max(span, std::abs(v[k] - v[0]));
  const double slack = 1e-12 * span;
  double w = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double dv = v[k] - v[k - 1];
    if (direction * dv < -slack) {
      throw Error(Errc::kNonmonotoneSegment, std::string(name) + " segment reverses at sample " +
                                                 std::to_string(k));
    }
    w += 0.5 * (p[k] + p[k - 1]) * dv;
  }
  return w;
}

}  // namespace

HysteresisReport loop_work(const PvLoop& loop) {
  HysteresisReport r;
  r.w_in = trapezoid(loop.load_p, loop.load_v, 1.0, "loading");
  r.w_out = -trapezoid(loop.unload_p, loop.unload_v, -1.0, "unloading");
  if (!(r.w_in > 0)) throw Error(Errc::kInvalidArgument, "loading work is not positive");
  r.ratio = (r.w_in - r.w_out) / r.w_in;
  return r;
}

std::vector<LobeThresholds> detect_thresholds(const std::vector<SnapEvent>& events) {
  if (events.empty()) throw Error(Errc::kNoEvents, "no snap events in the record");
  std::vector<LobeThresholds> out;
  for (const auto& ev : events) {
    auto it = std::find_if(out.begin(), out.end(), [&](const LobeThresholds& l) {
      return l.element == ev.element && l.lobe == ev.lobe;
    });
    if (it == out.end()) {
      out.push_back({ev.element, ev.lobe, {}, {}});
      it = out.end() - 1;
    }
    (ev.kind == SnapKind::kSnapThrough ? it->snap_through : it->snap_back).push_back(ev.pressure);
  }
  return out;
}

LogThresholds detect_thresholds(const PressureLog& log, double sharpness) {
  const std::size_t n = log.t.size();
  if (n != log.p.size() || n < 3) throw Error(Errc::kInvalidArgument, "pressure log too short");
  std::vector<double> slope(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = log.t[k + 1] - log.t[k];
    if (!(dt > 0)) throw Error(Errc::kInvalidArgument, "pressure log times must increase");
    slope[k] = (log.p[k + 1] - log.p[k]) / dt;
  }
  std::vector<double> mag(slope.size());
  std::transform(slope.begin(), slope.end(), mag.begin(), [](double s) { return std::abs(s); });
  auto mid = mag.begin() + static_cast<long>(mag.size() / 2);
  std::nth_element(mag.begin(), mid, mag.end());
  const double cut = sharpness * std::max(*mid, 1e-300);

  LogThresholds out;
  std::size_t k = 0;
  while (k < slope.size()) {
    if (std::abs(slope[k]) <= cut) {
      ++k;
      continue;
    }
    // One transient: a run of steep slopes of the same sign.
    const bool drop = slope[k] < 0;
    const double before = log.p[k];
    while (k < slope.size() && std::abs(slope[k]) > cut && (slope[k] < 0) == drop) ++k;
    (drop ? out.snap_through : out.snap_back).push_back(before);
  }
  if (out.snap_through.empty() && out.snap_back.empty()) {
    throw Error(Errc::kNoEvents, "no sharp pressure transients in the log");
  }
  return out;
}

std::map<std::string, std::string> element_groups(const Network& net) {
  std::map<std::string, std::string> out;
  for (const auto& e : net.elements) out[e.name] = e.group;
  return out;
}

double sequencing_delay(const std::vector<SnapEvent>& events,
                        const std::map<std::string, std::string>& groups, double t_start) {
  auto first = [&](const std::string& group) {
    for (const auto& ev : events) {
      if (ev.t < t_start || ev.lobe != Lobe::kStrong || ev.kind != SnapKind::kSnapThrough) continue;
      auto g = groups.find(ev.element);
      if (g != groups.end() && g->second == group) return ev.t;
    }
    throw Error(Errc::kMissingGroupEvent, "no strong snap-through in group '" + group + "'");
  };
  const double rear = first("rear");
  return first("front") - rear;
}

}  // namespace snapnet
