#pragma once

#include <map>
#include <string>
#include <vector>

#include "snapnet/simulate.hpp"

namespace snapnet {

/// Pressure-volume samples split into a loading part (volume rising to its
/// maximum) and an unloading part (from the maximum on).
struct PvLoop {
  std::vector<double> load_p, load_v;      // Pa, m^3
  std::vector<double> unload_p, unload_v;  // starts at the loading endpoint
};

/// Splits at the first maximum of v. Both halves share that sample.
PvLoop make_pv_loop(const std::vector<double>& p, const std::vector<double>& v);

struct HysteresisReport {
  double w_in = 0;   // J
  double w_out = 0;  // J
  double ratio = 0;  // (w_in - w_out) / w_in
};

/// Trapezoidal work on each half; W_out is counted positive for a volume
/// decrease. Throws kNonmonotoneSegment when a half runs backwards.
HysteresisReport loop_work(const PvLoop& loop);

struct LobeThresholds {
  std::string element;
  Lobe lobe = Lobe::kWeak;
  std::vector<double> snap_through;  // node pressure at each event, Pa
  std::vector<double> snap_back;
};

/// Groups event pressures per lobe, in lobe order of first appearance.
/// Throws kNoEvents for an empty list.
std::vector<LobeThresholds> detect_thresholds(const std::vector<SnapEvent>& events);

/// Pressure-only record, e.g. from a sensor.
struct PressureLog {
  std::vector<double> t;  // s
  std::vector<double> p;  // Pa
};

struct LogThresholds {
  std::vector<double> snap_through;  // Pa before each sudden drop
  std::vector<double> snap_back;     // Pa before each sudden rise
};

/// Snaps show up as pressure transients much steeper than the loading
/// ramp: a drop when a lobe snaps through, a jump when it snaps back.
/// Slopes above `sharpness` times the median absolute slope count as one.
LogThresholds detect_thresholds(const PressureLog& log, double sharpness = 20.0);

/// Element name to group tag.
std::map<std::string, std::string> element_groups(const Network& net);

/// First front-group minus first rear-group strong snap-through at or after
/// t_start. Throws kMissingGroupEvent if a group has none.
double sequencing_delay(const std::vector<SnapEvent>& events,
                        const std::map<std::string, std::string>& groups, double t_start = 0);

}  // namespace snapnet
