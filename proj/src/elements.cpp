#include "snapnet/elements.hpp"

#include <cmath>
#include <string>

namespace snapnet {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "INVALID_ARGUMENT";
    case Errc::kInfeasibleSpec: return "INFEASIBLE_SPEC";
    case Errc::kOutOfRange: return "OUT_OF_RANGE";
    case Errc::kNoRootOnBranch: return "NO_ROOT_ON_BRANCH";
    case Errc::kDisconnectedGraph: return "DISCONNECTED_GRAPH";
    case Errc::kDanglingReference: return "DANGLING_REFERENCE";
    case Errc::kNonpositiveResistance: return "NONPOSITIVE_RESISTANCE";
    case Errc::kInvalidElement: return "INVALID_ELEMENT";
    case Errc::kStepFailure: return "STEP_FAILURE";
    case Errc::kNonfiniteState: return "NONFINITE_STATE";
    case Errc::kUnknownElement: return "UNKNOWN_ELEMENT";
    case Errc::kOpenPath: return "OPEN_PATH";
    case Errc::kGridMismatch: return "GRID_MISMATCH";
    case Errc::kTooShort: return "TOO_SHORT";
    case Errc::kUnpairedEvent: return "UNPAIRED_EVENT";
    case Errc::kNonmonotoneSegment: return "NONMONOTONE_SEGMENT";
    case Errc::kNoEvents: return "NO_EVENTS";
    case Errc::kMissingGroupEvent: return "MISSING_GROUP_EVENT";
    case Errc::kEvaluatorFailure: return "EVALUATOR_FAILURE";
    case Errc::kParse: return "PARSE_ERROR";
    case Errc::kSchema: return "SCHEMA_ERROR";
  }
  return "UNKNOWN";
}

double channel_resistance(const ChannelGeometry& geom) {
  if (!(geom.diameter > 0 && geom.length > 0 && geom.fluid_viscosity > 0)) {
    throw Error(Errc::kInvalidArgument, "channel geometry must be strictly positive");
  }
  const double d2 = geom.diameter * geom.diameter;
  return 128.0 * geom.fluid_viscosity * geom.length / (std::numbers::pi * d2 * d2);
}

double gas_capacitance(double volume, double p_abs) {
  if (!(volume >= 0 && p_abs > 0)) {
    throw Error(Errc::kInvalidArgument, "capacitance needs volume >= 0 and p_abs > 0");
  }
  return volume / p_abs;
}

void check_source(const Source& src) {
  if (!std::isfinite(src.amplitude)) throw Error(Errc::kInvalidArgument, "source amplitude not finite");
  if (!(src.frequency >= 0) || !std::isfinite(src.frequency)) {
    throw Error(Errc::kInvalidArgument, "source frequency must be >= 0");
  }
  if (!(src.switching_delay >= 0) || !std::isfinite(src.switching_delay)) {
    throw Error(Errc::kInvalidArgument, "switching_delay must be >= 0");
  }
  if (src.kind == SourceKind::kFlowRamp) {
    if (!(src.target_volume >= 0) || !std::isfinite(src.target_volume)) {
      throw Error(Errc::kInvalidArgument, "target_volume must be >= 0");
    }
    if (src.frequency > 0 && src.amplitude != 0 &&
        flow_cycle_duration(src) > 1.0 / src.frequency * (1 + 1e-12)) {
      throw Error(Errc::kInvalidArgument,
                  "flow ramp cycle is longer than the period 1/frequency");
    }
  }
}

namespace {

bool flow_is_idle(const Source& src) { return src.amplitude == 0 || src.target_volume == 0; }

double ramp_time(const Source& src) { return src.target_volume / std::abs(src.amplitude); }

// Time since the start of the current flow cycle.
double flow_local_time(const Source& src, double t) {
  if (src.frequency > 0) {
    const double period = 1.0 / src.frequency;
    return t - std::floor(t / period) * period;
  }
  return t;
}

}  // namespace

double flow_cycle_duration(const Source& src) {
  if (flow_is_idle(src)) return src.switching_delay;
  return 2.0 * ramp_time(src) + src.switching_delay;
}

double source_value(const Source& src, double t) {
  switch (src.kind) {
    case SourceKind::kVent:
      return 0.0;
    case SourceKind::kPressureRampWave: {
      if (src.frequency == 0) return src.amplitude;
      const double phase = src.frequency * t + 0.5;
      return src.amplitude * (2.0 * (phase - std::floor(phase)) - 1.0);
    }
    case SourceKind::kFlowRamp: {
      if (flow_is_idle(src)) return 0.0;
      const double s = flow_local_time(src, t);
      const double ramp = ramp_time(src);
      if (s < ramp) return src.amplitude;
      if (s < ramp + src.switching_delay) return 0.0;
      if (s < 2.0 * ramp + src.switching_delay) return -src.amplitude;
      return 0.0;
    }
  }
  return 0.0;
}

double injected_volume(const Source& src, double t) {
  if (src.kind != SourceKind::kFlowRamp || flow_is_idle(src)) return 0.0;
  const double s = flow_local_time(src, t);
  const double ramp = ramp_time(src);
  if (s < ramp) return src.amplitude * s;
  if (s < ramp + src.switching_delay) return src.amplitude * ramp;
  if (s < 2.0 * ramp + src.switching_delay) {
    return src.amplitude * (2.0 * ramp + src.switching_delay - s);
  }
  return 0.0;
}

std::vector<double> source_breakpoints(const Source& src, double t_end) {
  std::vector<double> out;
  auto add = [&](double t) {
    if (t > 0 && t < t_end && (out.empty() || t > out.back())) out.push_back(t);
  };
  switch (src.kind) {
    case SourceKind::kVent:
      break;
    case SourceKind::kPressureRampWave:
      if (src.frequency > 0) {
        const double period = 1.0 / src.frequency;
        for (long k = 0; (k + 0.5) * period < t_end; ++k) add((k + 0.5) * period);
      }
      break;
    case SourceKind::kFlowRamp: {
      if (flow_is_idle(src)) break;
      const double ramp = ramp_time(src);
      const double marks[] = {ramp, ramp + src.switching_delay, 2.0 * ramp + src.switching_delay};
      if (src.frequency > 0) {
        const double period = 1.0 / src.frequency;
        for (long k = 0; k * period < t_end; ++k) {
          add(k * period);
          for (double m : marks) add(k * period + m);
        }
      } else {
        for (double m : marks) add(m);
      }
      break;
    }
  }
  return out;
}

}  // namespace snapnet
