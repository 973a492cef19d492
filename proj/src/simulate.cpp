#include "snapnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace snapnet {

void check_config(const SolverConfig& cfg) {
  if (!(cfg.dt_min > 0 && cfg.dt_min <= cfg.dt_max)) {
    throw Error(Errc::kInvalidArgument, "solver needs 0 < dt_min <= dt_max");
  }
  if (!(cfg.rtol > 0 && cfg.atol > 0)) throw Error(Errc::kInvalidArgument, "tolerances must be > 0");
  if (cfg.max_steps <= 0) throw Error(Errc::kInvalidArgument, "max_steps must be > 0");
  if (!(cfg.tau_snap_override >= 0)) throw Error(Errc::kInvalidArgument, "negative tau_snap override");
}

std::string_view to_string(SnapKind kind) {
  return kind == SnapKind::kSnapThrough ? "SNAP_THROUGH" : "SNAP_BACK";
}

std::size_t Trace::node_index(const std::string& name) const {
  auto it = std::find(node_names.begin(), node_names.end(), name);
  if (it == node_names.end()) throw Error(Errc::kDanglingReference, "no node '" + name + "' in trace");
  return static_cast<std::size_t>(it - node_names.begin());
}

std::size_t Trace::lobe_index(const std::string& element, Lobe lobe) const {
  for (std::size_t i = 0; i < lobes.size(); ++i) {
    if (lobes[i].element == element && lobes[i].lobe == lobe) return i;
  }
  throw Error(Errc::kUnknownElement, "no snap element '" + element + "' in trace");
}

const std::vector<double>& Trace::element_pressure(const std::string& element) const {
  return pressure[node_index(lobes[lobe_index(element, Lobe::kWeak)].node)];
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kGamma = 2.0 - std::numbers::sqrt2;
constexpr double kDiag = kGamma / 2.0;
// Local error constant of TR-BDF2.
constexpr double kErrConst = (-3.0 * kGamma * kGamma + 4.0 * kGamma - 2.0) / (12.0 * (2.0 - kGamma));

struct LobeModel {
  std::size_t node;
  PvLaw pv;
  double tau;
};

struct EdgeModel {
  std::size_t a, b;  // node indices, ambient == nodes.size()
  double conductance;
};

// Network flattened into index form. State layout:
// [excess gas per free node | lobe volumes | injected | vented].
class Model {
 public:
  Model(const Network& net, const SolverConfig& cfg) {
    const std::size_t n = net.nodes.size();
    ambient_ = n;
    free_slot_.assign(n + 1, -1);
    source_of_.assign(n + 1, -1);
    sink_.assign(n + 1, false);
    sink_[ambient_] = true;
    for (std::size_t k = 0; k < net.sources.size(); ++k) {
      const auto& s = net.sources[k];
      const std::size_t i = node_of(net, s.node);
      sources_.push_back(s.source);
      if (is_pressure_source(s.source)) {
        source_of_[i] = static_cast<int>(k);
        sink_[i] = s.source.kind == SourceKind::kVent;
      } else {
        flow_sources_.push_back({i, k});
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (source_of_[i] < 0) free_slot_[i] = static_cast<int>(free_nodes_.size()), free_nodes_.push_back(i);
    }
    fixed_volume_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) fixed_volume_[i] = net.nodes[i].dead_volume;
    for (const auto& e : net.elements) {
      const std::size_t i = node_of(net, e.node);
      if (const auto* s = std::get_if<SnapElement>(&e.model)) {
        fixed_volume_[i] += s->base_chamber_volume;
        const double tau = cfg.tau_snap_override > 0 ? cfg.tau_snap_override : s->tau_snap;
        lobes_.push_back({i, build_cubic_pv(s->weak), tau});
        lobes_.push_back({i, build_cubic_pv(s->strong), tau});
      } else {
        fixed_volume_[i] += std::get<Capacitance>(e.model).volume;
      }
    }
    for (const auto& e : net.edges) {
      edges_.push_back({node_of(net, e.from), node_of(net, e.to), 1.0 / e.resistance});
    }
    branch_.assign(lobes_.size(), Branch::kPreSnap);
  }

  std::size_t nfree() const { return free_nodes_.size(); }
  std::size_t nlobes() const { return lobes_.size(); }
  std::size_t size() const { return nfree() + nlobes() + 2; }
  std::size_t inj() const { return nfree() + nlobes(); }
  std::size_t vent() const { return inj() + 1; }

  Vec initial_state() {
    Vec y = Vec::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < nlobes(); ++j) {
      y(lobe_slot(j)) = clamped_equilibrium_volume(lobes_[j].pv, 0.0, Branch::kPreSnap);
    }
    rest_volume_.assign(nfree(), 0.0);
    for (std::size_t k = 0; k < nfree(); ++k) rest_volume_[k] = node_volume(free_nodes_[k], y);
    return y;
  }

  double node_volume(std::size_t i, const Vec& y) const {
    double v = fixed_volume_[i];
    for (std::size_t j = 0; j < nlobes(); ++j) {
      if (lobes_[j].node == i) v += y(lobe_slot(j));
    }
    return v;
  }

  // Gauge pressure of every node (ambient last) at time t.
  void pressures(double t, const Vec& y, std::vector<double>& p) const {
    p.assign(ambient_ + 1, 0.0);
    for (std::size_t i = 0; i < ambient_; ++i) {
      if (source_of_[i] >= 0) p[i] = source_value(sources_[static_cast<std::size_t>(source_of_[i])], t);
    }
    for (std::size_t k = 0; k < nfree(); ++k) {
      const std::size_t i = free_nodes_[k];
      const double gas = rest_volume_[k] + y(static_cast<Eigen::Index>(k));
      p[i] = units::kAtmosphere * (gas / node_volume(i, y) - 1.0);
    }
  }

  void rhs(double t, const Vec& y, Vec& dy) const {
    pressures(t, y, scratch_);
    const auto& p = scratch_;
    dy.setZero(static_cast<Eigen::Index>(size()));
    for (const auto& e : edges_) {
      const double q = (p[e.a] - p[e.b]) * e.conductance;
      transfer(e.a, -q, dy);
      transfer(e.b, q, dy);
    }
    for (const auto& [node, k] : flow_sources_) {
      const double q = source_value(sources_[k], t);
      dy(free_slot_[node]) += q;
      dy(inj()) += q;
    }
    for (std::size_t j = 0; j < nlobes(); ++j) {
      const auto& l = lobes_[j];
      const double target = clamped_equilibrium_volume(l.pv, p[l.node], branch_[j]);
      dy(lobe_slot(j)) = (target - y(lobe_slot(j))) / l.tau;
    }
  }

  // Positive once the lobe's node pressure is past the fold of its branch.
  double fold_excess(std::size_t j, const std::vector<double>& p) const {
    const auto& l = lobes_[j];
    const auto& s = l.pv.spec();
    return branch_[j] == Branch::kPreSnap ? p[l.node] - s.p_snap_through : s.p_snap_back - p[l.node];
  }

  void flip(std::size_t j) {
    branch_[j] = branch_[j] == Branch::kPreSnap ? Branch::kPostSnap : Branch::kPreSnap;
  }

  Branch branch(std::size_t j) const { return branch_[j]; }
  Eigen::Index lobe_slot(std::size_t j) const { return static_cast<Eigen::Index>(nfree() + j); }

  // Typical magnitude per state component, for difference increments.
  double scale(std::size_t k) const {
    if (k < nfree()) return rest_volume_[k];
    if (k < inj()) return lobes_[k - nfree()].pv.half_width();
    return 1e-9;
  }

  const std::vector<Source>& sources() const { return sources_; }

 private:
  static std::size_t node_of(const Network& net, const std::string& name) {
    if (name == net.ambient) return net.nodes.size();
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      if (net.nodes[i].name == name) return i;
    }
    throw Error(Errc::kDanglingReference, "unknown node '" + name + "'");
  }

  // Adds flow q into node i, booking exchange with imposed nodes.
  void transfer(std::size_t i, double q, Vec& dy) const {
    if (free_slot_[i] >= 0) {
      dy(free_slot_[i]) += q;
    } else if (sink_[i]) {
      dy(vent()) += q;
    } else {
      dy(inj()) -= q;
    }
  }

  std::size_t ambient_;
  std::vector<int> free_slot_;
  std::vector<int> source_of_;
  std::vector<bool> sink_;
  std::vector<std::size_t> free_nodes_;
  std::vector<double> fixed_volume_;
  std::vector<double> rest_volume_;
  std::vector<Source> sources_;
  std::vector<std::pair<std::size_t, std::size_t>> flow_sources_;
  std::vector<LobeModel> lobes_;
  std::vector<EdgeModel> edges_;
  std::vector<Branch> branch_;
  mutable std::vector<double> scratch_;
};

struct StepResult {
  bool converged = false;
  Vec y;
  double error = 0;  // weighted max norm, 1 == tolerance
};

class TrBdf2 {
 public:
  TrBdf2(Model& model, const SolverConfig& cfg) : model_(model), cfg_(cfg) {}

  // Prepares the Jacobian at the step start.
  void begin(double t, const Vec& y) {
    t0_ = t;
    y0_ = y;
    model_.rhs(t, y, f0_);
    jacobian(t, y, f0_);
    weights_ = (cfg_.atol + cfg_.rtol * y.array().abs()).matrix();
  }

  // One step of size h from the prepared start. t_eval_end is the time at
  // which the end-of-step right-hand side is evaluated; it differs from
  // t0 + h only when the step lands on a source discontinuity.
  StepResult step(double h, double t_eval_end) {
    StepResult r;
    Eigen::PartialPivLU<Mat> lu = factor(h);

    // Trapezoidal stage to t0 + gamma h.
    const double tg = t0_ + kGamma * h;
    const Vec c1 = y0_ + kDiag * h * f0_;
    const Vec zg0 = y0_ + kGamma * h * f0_;
    Vec zg = zg0;
    Vec fg;
    if (!solve_stage(lu, h, tg, c1, zg0, zg, fg)) return r;

    // BDF2 stage to t0 + h.
    const double a = 1.0 / (kGamma * (2.0 - kGamma));
    const double b = (1.0 - kGamma) * (1.0 - kGamma) / (kGamma * (2.0 - kGamma));
    const Vec c2 = a * zg - b * y0_;
    const Vec z10 = zg + (1.0 - kGamma) * h * fg;
    Vec z1 = z10;
    Vec f1;
    if (!solve_stage(lu, h, t_eval_end, c2, z10, z1, f1)) return r;

    const Vec dd = f0_ / kGamma - fg / (kGamma * (1.0 - kGamma)) + f1 / (1.0 - kGamma);
    const Vec est = lu.solve((2.0 * kErrConst * h) * dd);
    r.error = (est.array().abs() / weights_.array()).maxCoeff();
    r.y = std::move(z1);
    r.converged = r.y.allFinite();
    if (!r.converged) throw Error(Errc::kNonfiniteState, "state became non-finite");
    return r;
  }

  const Vec& start_state() const { return y0_; }

 private:
  void jacobian(double t, const Vec& y, const Vec& f) {
    const auto n = static_cast<Eigen::Index>(model_.size());
    jac_ = Mat::Zero(n, n);
    Vec yp = y, fp;
    const auto dynamic = static_cast<Eigen::Index>(model_.inj());
    for (Eigen::Index k = 0; k < dynamic; ++k) {
      const double dk = 1e-8 * std::max(std::abs(y(k)), model_.scale(static_cast<std::size_t>(k)));
      yp(k) = y(k) + dk;
      model_.rhs(t, yp, fp);
      jac_.col(k) = (fp - f) / dk;
      yp(k) = y(k);
    }
  }

  Eigen::PartialPivLU<Mat> factor(double h) const {
    const auto n = static_cast<Eigen::Index>(model_.size());
    return Eigen::PartialPivLU<Mat>(Mat::Identity(n, n) - kDiag * h * jac_);
  }

  // Solves z = c + d h f(t, z) from the predictor z0. The Jacobian is
  // refreshed at the last iterate when simplified Newton stalls, which
  // happens next to a fold where the lobe equilibrium has a corner.
  bool solve_stage(Eigen::PartialPivLU<Mat>& lu, double h, double t, const Vec& c, const Vec& z0,
                   Vec& z, Vec& fz) {
    for (int refresh = 0; refresh < 2; ++refresh) {
      if (newton(lu, h, t, c, z, fz)) return true;
      if (!z.allFinite()) z = z0;
      model_.rhs(t, z, fz);
      jacobian(t, z, fz);
      lu = factor(h);
    }
    return damped_newton(lu, h, t, c, z, fz);
  }

  double weighted(const Vec& v) const { return (v.array().abs() / weights_.array()).maxCoeff(); }

  bool newton(const Eigen::PartialPivLU<Mat>& lu, double h, double t, const Vec& c, Vec& z, Vec& fz) {
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12; ++it) {
      model_.rhs(t, z, fz);
      const Vec delta = lu.solve(-(z - kDiag * h * fz - c));
      z += delta;
      const double norm = weighted(delta);
      if (!std::isfinite(norm)) return false;
      if (norm < 1e-3) {
        model_.rhs(t, z, fz);
        return true;
      }
      if (it > 1 && norm > 0.9 * last) return false;
      last = norm;
    }
    return false;
  }

  // Full Newton with backtracking on the residual. The stage equations are
  // monotone in the lobe volumes, so this converges where the simplified
  // iteration cycles around a fold corner.
  bool damped_newton(Eigen::PartialPivLU<Mat>& lu, double h, double t, const Vec& c, Vec& z, Vec& fz) {
    model_.rhs(t, z, fz);
    Vec res = z - kDiag * h * fz - c;
    double rnorm = weighted(res);
    for (int it = 0; it < 60; ++it) {
      jacobian(t, z, fz);
      lu = factor(h);
      const Vec delta = lu.solve(-res);
      if (!delta.allFinite()) return false;
      double lambda = 1;
      Vec trial, ftrial, rtrial;
      double tnorm = 0;
      for (;;) {
        trial = z + lambda * delta;
        model_.rhs(t, trial, ftrial);
        rtrial = trial - kDiag * h * ftrial - c;
        tnorm = weighted(rtrial);
        if (tnorm <= (1 - 1e-4 * lambda) * rnorm || lambda < 1e-6) break;
        lambda /= 2;
      }
      z = std::move(trial);
      fz = std::move(ftrial);
      res = std::move(rtrial);
      rnorm = tnorm;
      if (lambda * weighted(delta) < 1e-3 && rnorm < 1e-3) return true;
    }
    return false;
  }

  Model& model_;
  const SolverConfig& cfg_;
  double t0_ = 0;
  Vec y0_, f0_;
  Mat jac_;
  Vec weights_;
};

std::vector<double> merged_breakpoints(const Model& model, double t_end) {
  std::vector<double> out;
  for (const auto& s : model.sources()) {
    const auto b = source_breakpoints(s, t_end);
    out.insert(out.end(), b.begin(), b.end());
  }
  out.push_back(t_end);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

class Recorder {
 public:
  Recorder(const Network& net, Trace& trace) : trace_(trace) {
    for (const auto& n : net.nodes) trace_.node_names.push_back(n.name);
    trace_.pressure.resize(net.nodes.size());
    for (const auto& e : net.elements) {
      const auto* s = std::get_if<SnapElement>(&e.model);
      if (!s) continue;
      for (Lobe lobe : {Lobe::kWeak, Lobe::kStrong}) {
        LobeSeries col;
        col.element = e.name;
        col.node = e.node;
        col.group = e.group;
        col.lobe = lobe;
        col.spec = lobe == Lobe::kWeak ? s->weak : s->strong;
        trace_.lobes.push_back(std::move(col));
      }
    }
  }

  void record(const Model& model, double t, const Vec& y) {
    model.pressures(t, y, p_);
    trace_.t.push_back(t);
    for (std::size_t i = 0; i < trace_.pressure.size(); ++i) trace_.pressure[i].push_back(p_[i]);
    for (std::size_t j = 0; j < model.nlobes(); ++j) {
      trace_.lobes[j].volume.push_back(y(model.lobe_slot(j)));
      trace_.lobes[j].snapped.push_back(model.branch(j) == Branch::kPostSnap ? 1 : 0);
    }
    trace_.injected.push_back(y(static_cast<Eigen::Index>(model.inj())));
    trace_.vented.push_back(y(static_cast<Eigen::Index>(model.vent())));
    // Stored gas from the recorded pressures, independent of the state's
    // own bookkeeping.
    double stored = 0;
    for (std::size_t i = 0; i < trace_.pressure.size(); ++i) {
      if (!free_nodes[i]) continue;
      stored += model.node_volume(i, y) * (p_[i] + units::kAtmosphere) / units::kAtmosphere;
    }
    trace_.stored.push_back(stored);
  }

  std::vector<bool> free_nodes;

 private:
  Trace& trace_;
  std::vector<double> p_;
};

}  // namespace

Trace simulate(const Network& input, const SolverConfig& cfg, double t_end) {
  check_config(cfg);
  if (!(t_end > 0) || !std::isfinite(t_end)) throw Error(Errc::kInvalidArgument, "t_end must be > 0");
  const Network net = validate(input);

  Model model(net, cfg);
  Vec y = model.initial_state();
  TrBdf2 solver(model, cfg);
  const auto breakpoints = merged_breakpoints(model, t_end);

  Trace trace;
  Recorder rec(net, trace);
  for (const auto& n : net.nodes) rec.free_nodes.push_back(!is_imposed(net, n.name));
  rec.record(model, 0.0, y);

  std::vector<double> p;
  auto crossed = [&](const Vec& state, double t) {
    model.pressures(t, state, p);
    for (std::size_t j = 0; j < model.nlobes(); ++j) {
      if (model.fold_excess(j, p) > 0) return true;
    }
    return false;
  };

  double t = 0;
  double h = cfg.dt_min;
  std::size_t next_bp = 0;
  long steps = 0;
  while (t < t_end) {
    if (++steps > cfg.max_steps) throw Error(Errc::kStepFailure, "max_steps exceeded");
    while (breakpoints[next_bp] <= t) ++next_bp;
    const double bp = breakpoints[next_bp];
    h = std::min(h, cfg.dt_max);
    bool landing = t + h >= bp - 1e-12 * std::max(1.0, bp);
    if (landing) h = bp - t;
    const double t_land_eval = std::nextafter(bp, 0.0);

    solver.begin(t, y);
    StepResult r = solver.step(h, landing ? t_land_eval : t + h);
    const bool at_floor = h <= cfg.dt_min * (1 + 1e-9);
    // At dt_min a converged step is taken even if the estimate exceeds the
    // tolerance: next to a fold the branch volume has a square-root corner
    // that no step size resolves.
    if (!r.converged || (r.error > 1.0 && !at_floor)) {
      if (at_floor) {
        throw Error(Errc::kStepFailure,
                    "cannot meet tolerance at dt_min near t = " + std::to_string(t) + " s");
      }
      const double shrink = r.converged ? std::clamp(0.9 * std::cbrt(1.0 / r.error), 0.2, 0.9) : 0.25;
      h = std::max(cfg.dt_min, h * shrink);
      continue;
    }

    // Narrow a fold crossing down to dt_min by re-stepping from t.
    bool event = crossed(r.y, landing ? t_land_eval : t + h);
    if (event && h > cfg.dt_min) {
      double lo = 0, hi = h;
      while (hi - lo > cfg.dt_min) {
        const double mid = 0.5 * (lo + hi);
        StepResult m = solver.step(mid, t + mid);
        if (m.converged && crossed(m.y, t + mid)) {
          hi = mid;
          r = std::move(m);
          landing = false;
        } else {
          lo = mid;
        }
      }
      h = hi;
    }

    const double err = r.error;
    t = landing ? bp : t + h;
    y = std::move(r.y);
    if (event) {
      model.pressures(t, y, p);
      for (std::size_t j = 0; j < model.nlobes(); ++j) {
        if (model.fold_excess(j, p) > 0) model.flip(j);
      }
    }
    rec.record(model, t, y);

    if (event || landing) {
      h = cfg.dt_min;
    } else {
      h = h * std::clamp(0.9 * std::cbrt(1.0 / std::max(err, 1e-12)), 0.2, 5.0);
    }
  }

  trace.events = detect_snap_events(trace);
  return trace;
}

std::vector<SnapEvent> detect_snap_events(const Trace& trace) {
  std::vector<SnapEvent> out;
  for (std::size_t k = 1; k < trace.samples(); ++k) {
    for (const auto& col : trace.lobes) {
      if (col.snapped[k] == col.snapped[k - 1]) continue;
      SnapEvent ev;
      ev.t = trace.t[k];
      ev.element = col.element;
      ev.lobe = col.lobe;
      ev.kind = col.snapped[k] ? SnapKind::kSnapThrough : SnapKind::kSnapBack;
      ev.pressure = trace.pressure[trace.node_index(col.node)][k];
      out.push_back(std::move(ev));
    }
  }
  return out;
}

double mass_balance_error(const Trace& trace) {
  double worst = 0;
  for (std::size_t k = 0; k < trace.samples(); ++k) {
    const double r = trace.injected[k] - trace.vented[k] - (trace.stored[k] - trace.stored[0]);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace snapnet
