#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "snapnet/error.hpp"
#include "snapnet/units.hpp"

namespace snapnet {

enum class Branch { kPreSnap, kPostSnap };

/// Fold description of one bistable lobe. Pressures are gauge Pa, volumes m^3.
///
/// p_snap_through is the upper limit point (reached at v_fold_lo while
/// inflating), p_snap_back the lower one (reached at v_fold_hi while
/// deflating). v_closed and v_open bracket the working range and define
/// the normalized deflection used by the tip kinematics.
template <typename Scalar>
struct SnapSpec {
  Scalar p_snap_through{};
  Scalar p_snap_back{};
  Scalar v_closed{};
  Scalar v_open{};
  Scalar v_fold_lo{};
  Scalar v_fold_hi{};
};

/// Cubic pressure-volume law with a local maximum at v_fold_lo and a local
/// minimum at v_fold_hi.
///
/// Evaluated in the normalized coordinate u = (v - center) / half_width,
/// where p = mid + k (u^3 - 3u). The raw power-basis coefficients are only
/// kept for reporting.
template <typename Scalar>
class PvCharacteristic {
 public:
  using Coefficients = Eigen::Matrix<Scalar, 4, 1>;  // a0, a1, a2, a3

  PvCharacteristic() = default;

  const SnapSpec<Scalar>& spec() const { return spec_; }
  Scalar center() const { return center_; }
  Scalar half_width() const { return half_width_; }

  /// Power-basis coefficients of p(v) with v in m^3.
  Coefficients coefficients() const {
    const Scalar c = center_;
    const Scalar h3 = half_width_ * half_width_ * half_width_;
    Coefficients a;
    a(3) = gain_ / h3;
    a(2) = Scalar(-3) * gain_ * c / h3;
    a(1) = Scalar(3) * gain_ * c * c / h3 - Scalar(3) * gain_ / half_width_;
    a(0) = mid_ - gain_ * c * c * c / h3 + Scalar(3) * gain_ * c / half_width_;
    return a;
  }

  Scalar normalized(Scalar v) const { return (v - center_) / half_width_; }

  Scalar pressure(Scalar v) const {
    const Scalar u = normalized(v);
    return mid_ + gain_ * u * (u * u - Scalar(3));
  }

  /// dp/dv.
  Scalar slope(Scalar v) const {
    const Scalar u = normalized(v);
    return gain_ * Scalar(3) * (u * u - Scalar(1)) / half_width_;
  }

  /// Normalized deflection, 0 at v_closed and 1 at v_open.
  Scalar deflection(Scalar v) const {
    return (v - spec_.v_closed) / (spec_.v_open - spec_.v_closed);
  }

  Scalar range_margin() const { return spec_.v_open - spec_.v_closed; }

  template <typename S>
  friend PvCharacteristic<S> build_cubic_pv(const SnapSpec<S>& spec);
  template <typename S>
  friend std::optional<S> equilibrium_volume(const PvCharacteristic<S>& pv, S p, Branch branch);

 private:
  SnapSpec<Scalar> spec_{};
  Scalar center_{};
  Scalar half_width_{1};
  Scalar mid_{};
  Scalar gain_{};
};

template <typename Scalar>
PvCharacteristic<Scalar> build_cubic_pv(const SnapSpec<Scalar>& spec) {
  using std::isfinite;
  const Scalar fields[] = {spec.p_snap_through, spec.p_snap_back, spec.v_closed,
                           spec.v_open,         spec.v_fold_lo,   spec.v_fold_hi};
  for (const Scalar& f : fields) {
    if (!isfinite(f)) throw Error(Errc::kInfeasibleSpec, "non-finite snap spec field");
  }
  if (!(spec.p_snap_through > spec.p_snap_back)) {
    throw Error(Errc::kInfeasibleSpec,
                "p_snap_through must exceed p_snap_back (no fold ordering otherwise)");
  }
  if (!(spec.v_closed < spec.v_fold_lo && spec.v_fold_lo < spec.v_fold_hi &&
        spec.v_fold_hi < spec.v_open)) {
    throw Error(Errc::kInfeasibleSpec,
                "volumes must satisfy v_closed < v_fold_lo < v_fold_hi < v_open");
  }
  PvCharacteristic<Scalar> pv;
  pv.spec_ = spec;
  pv.center_ = (spec.v_fold_lo + spec.v_fold_hi) / Scalar(2);
  pv.half_width_ = (spec.v_fold_hi - spec.v_fold_lo) / Scalar(2);
  pv.mid_ = (spec.p_snap_through + spec.p_snap_back) / Scalar(2);
  pv.gain_ = (spec.p_snap_through - spec.p_snap_back) / Scalar(4);
  return pv;
}

/// Throws kOutOfRange outside [v_closed - margin, v_open + margin], with the
/// margin equal to the closed-to-open span.
template <typename Scalar>
Scalar lobe_pressure(const PvCharacteristic<Scalar>& pv, Scalar v) {
  const auto& s = pv.spec();
  const Scalar margin = pv.range_margin();
  if (!(v >= s.v_closed - margin && v <= s.v_open + margin)) {
    throw Error(Errc::kOutOfRange, "lobe volume outside the characteristic's range");
  }
  return pv.pressure(v);
}

/// Root of p(v) = p on the requested outer branch, or nullopt when the
/// pressure lies beyond that branch's fold (the caller must snap).
template <typename Scalar>
std::optional<Scalar> equilibrium_volume(const PvCharacteristic<Scalar>& pv, Scalar p,
                                         Branch branch) {
  using std::acos;
  using std::acosh;
  using std::abs;
  using std::cos;
  using std::cosh;
  const auto& s = pv.spec();
  if (branch == Branch::kPreSnap && p > s.p_snap_through) return std::nullopt;
  if (branch == Branch::kPostSnap && p < s.p_snap_back) return std::nullopt;

  // Solve u^3 - 3u = y on u <= -1 (pre) or u >= 1 (post).
  Scalar y = (p - pv.mid_) / pv.gain_;
  const Scalar third = Scalar(1) / Scalar(3);
  const Scalar two_pi_third = Scalar(2) * std::numbers::pi_v<double> / Scalar(3);
  Scalar u;
  if (branch == Branch::kPreSnap) {
    if (y >= Scalar(-2)) {
      if (y > Scalar(2)) y = Scalar(2);
      u = Scalar(2) * cos(acos(y / Scalar(2)) * third + two_pi_third);
    } else {
      u = Scalar(-2) * cosh(acosh(-y / Scalar(2)) * third);
    }
  } else {
    if (y <= Scalar(2)) {
      if (y < Scalar(-2)) y = Scalar(-2);
      u = Scalar(2) * cos(acos(y / Scalar(2)) * third);
    } else {
      u = Scalar(2) * cosh(acosh(y / Scalar(2)) * third);
    }
  }
  // Newton polish away from the fold, where the derivative vanishes.
  for (int it = 0; it < 2; ++it) {
    const Scalar d = Scalar(3) * (u * u - Scalar(1));
    if (abs(d) < Scalar(1e-3)) break;
    u -= (u * (u * u - Scalar(3)) - y) / d;
  }
  return pv.center_ + u * pv.half_width_;
}

/// Branch-following equilibrium that saturates at the fold volume when the
/// pressure has passed the fold. Keeps the relaxation law continuous.
template <typename Scalar>
Scalar clamped_equilibrium_volume(const PvCharacteristic<Scalar>& pv, Scalar p, Branch branch) {
  if (auto v = equilibrium_volume(pv, p, branch)) return *v;
  return branch == Branch::kPreSnap ? pv.spec().v_fold_lo : pv.spec().v_fold_hi;
}

/// Builds a spec from its folds. v_closed is the unsnapped rest volume at
/// gauge zero and v_open the post-snap volume reached at p_snap_through.
template <typename Scalar>
SnapSpec<Scalar> make_snap_spec(Scalar p_snap_through, Scalar p_snap_back, Scalar v_fold_lo,
                                Scalar v_fold_hi) {
  const Scalar half = (v_fold_hi - v_fold_lo) / Scalar(2);
  SnapSpec<Scalar> spec{p_snap_through, p_snap_back, v_fold_lo - half, v_fold_hi + half, v_fold_lo, v_fold_hi};
  if (p_snap_through > Scalar(0) && p_snap_through > p_snap_back && v_fold_lo < v_fold_hi) {
    if (auto rest = equilibrium_volume(build_cubic_pv(spec), Scalar(0), Branch::kPreSnap)) {
      spec.v_closed = *rest;
    }
  }
  return spec;
}

using PvLaw = PvCharacteristic<double>;

struct ChannelGeometry {
  double diameter = 0;  // m
  double length = 0;    // m
  double fluid_viscosity = units::kAirViscosity;
};

/// Hagen-Poiseuille resistance of a circular channel, Pa s / m^3.
double channel_resistance(const ChannelGeometry& geom);

/// Isothermal ideal-gas capacitance v / p_abs, m^3 / Pa.
double gas_capacitance(double volume, double p_abs);

enum class SourceKind { kFlowRamp, kPressureRampWave, kVent };

struct Source {
  SourceKind kind = SourceKind::kVent;
  double amplitude = 0;        // m^3/s (flow) or Pa (pressure)
  double frequency = 0;        // Hz, 0 for one-shot
  double switching_delay = 0;  // s
  double target_volume = 0;    // m^3, flow kind only
};

void check_source(const Source& src);

/// Flow (m^3/s) for FLOW_RAMP, gauge pressure (Pa) otherwise.
///
/// FLOW_RAMP injects +amplitude until target_volume is in, holds for the
/// switching delay, then withdraws at -amplitude; with frequency > 0 the
/// cycle repeats every 1/frequency. PRESSURE_RAMP_WAVE is a rising sawtooth
/// of +-amplitude that starts at zero and drops from +amplitude to
/// -amplitude at t = (k + 1/2) / frequency; frequency 0 holds +amplitude
/// from t = 0 on (a step applied to a system at rest). VENT is a fixed 0 gauge.
double source_value(const Source& src, double t);

/// Closed-form integral of a FLOW_RAMP source over [0, t].
double injected_volume(const Source& src, double t);

/// Duration of one inject/hold/withdraw cycle of a FLOW_RAMP source.
double flow_cycle_duration(const Source& src);

/// Times in (0, t_end) where source_value is discontinuous.
std::vector<double> source_breakpoints(const Source& src, double t_end);

inline bool is_pressure_source(const Source& src) { return src.kind != SourceKind::kFlowRamp; }

}  // namespace snapnet
