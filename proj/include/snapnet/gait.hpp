#pragma once

#include <limits>
#include <string>
#include <vector>

#include "snapnet/simulate.hpp"

namespace snapnet {

/// Small-angle pillar tilt: the tip moves laterally with the lobe asymmetry
/// and vertically with the mean lobe deflection.
struct TipKinematics {
  double pillar_length = 5e-3;  // m
  double lateral_gain = 0;      // m per unit of (w_weak - w_strong)
  double vertical_gain = 0;     // m per unit of (w_weak + w_strong) / 2
};

struct TipPath {
  std::string leg;
  std::vector<double> t;
  std::vector<double> x;  // m, forward
  std::vector<double> y;  // m, up
};

TipPath tip_trajectory(const Trace& trace, const std::string& element, const TipKinematics& kin);

/// Samples with t0 <= t <= t1.
TipPath slice(const TipPath& path, double t0, double t1);

struct SweptArea {
  double area = 0;             // m^2
  bool counterclockwise = true;
};

/// Shoelace area of the closed polygon through the samples. Throws
/// kOpenPath when the endpoints are further apart than closure_fraction of
/// the bounding-box diagonal.
SweptArea swept_area(const TipPath& path, double closure_fraction = 0.02);

struct ContactModel {
  double contact_height = 0;  // m, a leg touches the ground while y <= this
};

enum class Regime { kWalking, kJumpLike };

std::string_view to_string(Regime regime);

struct PhaseInterval {
  double start = 0;  // fraction of the period in [0, 1)
  double end = 0;    // may be smaller than start when the interval wraps
};

struct LegPhase {
  std::string leg;
  std::vector<PhaseInterval> intervals;
};

struct GaitResult {
  std::vector<double> t;
  std::vector<double> body;  // m, body displacement since the window start
  double duration = 0;       // s
  double stride = 0;         // m per source period
  double speed = 0;          // m/s
  double bl_per_s = 0;
  Regime regime = Regime::kWalking;
  bool no_events = false;
  std::vector<LegPhase> phases;
};

/// Ratchet contact: a grounded leg sticks while its tip moves rearward and
/// slips forward freely. Each step moves the body by the mean rearward tip
/// displacement over the sticking legs.
GaitResult body_displacement(const std::vector<TipPath>& paths, const ContactModel& contact,
                             double period);

struct RegimeReport {
  Regime regime = Regime::kWalking;
  bool no_events = false;  // drive produced no snap at all
};

/// Looks at the last full drive period. JUMP_LIKE when the front group's
/// strong lobes never snap through there while the rear group's do.
RegimeReport classify_regime(const Trace& trace, const Network& net);

/// Period of the network's periodic drive; throws if there is none.
double drive_period(const Network& net);

/// Strong-lobe activation intervals per leg. Snap-throughs at times in
/// [t_start, t_stop) are paired with the next snap-back of the same lobe.
std::vector<LegPhase> phase_diagram(const std::vector<SnapEvent>& events, double period,
                                    const std::vector<std::string>& legs, double t_start = 0,
                                    double t_stop = std::numeric_limits<double>::infinity());

}  // namespace snapnet
