#include "snapnet/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace snapnet {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers (typos, wrong unit suffixes) can be reported.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& get(const std::string& key) {
    if (!obj_.contains(key)) fail(at(key), "missing field '" + key + "'");
    used_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(at(key), "expected a finite number");
    return d;
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  long integer_or(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    return v.get<long>();
  }

  const json& array(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) fail(at(key), "expected an array");
    return v;
  }

  Fields object(const std::string& key) { return Fields(get(key), at(key)); }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  std::string at(std::size_t index) const { return path_ + "/" + std::to_string(index); }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) fail(at(key), "unknown field '" + key + "'");
    }
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(Errc::kParse, "field " + where + ": " + what);
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

SnapSpec<double> parse_lobe(Fields f, const SnapSpec<double>* strong) {
  SnapSpec<double> s;
  if (strong && !f.has("p_snap_through_mbar")) {
    s.p_snap_through = f.number_or("p_snap_through_ratio", 0.8) * strong->p_snap_through;
  } else {
    s.p_snap_through = units::mbar(f.number("p_snap_through_mbar"));
  }
  s.p_snap_back = units::mbar(f.number("p_snap_back_mbar"));
  s.v_fold_lo = units::ul(f.number("v_fold_lo_uL"));
  s.v_fold_hi = units::ul(f.number("v_fold_hi_uL"));
  const auto derived = make_snap_spec(s.p_snap_through, s.p_snap_back, s.v_fold_lo, s.v_fold_hi);
  s.v_closed = f.has("v_closed_uL") ? units::ul(f.number("v_closed_uL")) : derived.v_closed;
  s.v_open = f.has("v_open_uL") ? units::ul(f.number("v_open_uL")) : derived.v_open;
  f.finish();
  return s;
}

Source parse_source(Fields& f) {
  Source s;
  const std::string kind = f.text("kind");
  if (kind == "FLOW_RAMP") {
    s.kind = SourceKind::kFlowRamp;
    s.amplitude = units::ml(f.number("amplitude_mL_per_s"));
    s.target_volume = units::ml(f.number("target_volume_mL"));
    s.switching_delay = f.number_or("switching_delay_s", 0.0);
    s.frequency = f.number_or("frequency_Hz", 0.0);
  } else if (kind == "PRESSURE_RAMP_WAVE") {
    s.kind = SourceKind::kPressureRampWave;
    s.amplitude = units::mbar(f.number("amplitude_mbar"));
    s.frequency = f.number_or("frequency_Hz", 0.0);
  } else if (kind == "VENT") {
    s.kind = SourceKind::kVent;
  } else {
    Fields::fail(f.at("kind"), "unknown source kind '" + kind + "'");
  }
  return s;
}

Network parse_network(Fields f) {
  Network net;
  net.ambient = f.text_or("ambient", "ambient");
  const json& nodes = f.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Fields n(nodes[i], f.at("nodes") + "/" + std::to_string(i));
    net.nodes.push_back({n.text("name"), units::ul(n.number_or("dead_volume_uL", 0.0))});
    n.finish();
  }
  if (f.has("edges")) {
    const json& edges = f.array("edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      Fields e(edges[i], f.at("edges") + "/" + std::to_string(i));
      EdgeDef d{e.text("name"), e.text("from"), e.text("to"), 0};
      if (e.has("channel")) {
        Fields c = e.object("channel");
        ChannelGeometry g;
        g.diameter = units::mm(c.number("diameter_mm"));
        g.length = units::mm(c.number("length_mm"));
        g.fluid_viscosity = c.number_or("viscosity_Pa_s", units::kAirViscosity);
        c.finish();
        d.resistance = channel_resistance(g);
      } else {
        d.resistance = e.number("resistance_Pa_s_per_m3");
      }
      e.finish();
      net.edges.push_back(std::move(d));
    }
  }
  if (f.has("elements")) {
    const json& elements = f.array("elements");
    for (std::size_t i = 0; i < elements.size(); ++i) {
      Fields e(elements[i], f.at("elements") + "/" + std::to_string(i));
      ElementDef d;
      d.name = e.text("name");
      d.node = e.text("node");
      d.group = e.text_or("group", "");
      const std::string type = e.text("type");
      if (type == "snap") {
        SnapElement s;
        s.strong = parse_lobe(e.object("strong"), nullptr);
        s.weak = parse_lobe(e.object("weak"), &s.strong);
        s.tau_snap = e.number_or("tau_snap_ms", 5.0) * 1e-3;
        s.base_chamber_volume =
            units::ul(e.number_or("base_chamber_volume_uL", units::to_ul(units::kDefaultChamberVolume)));
        d.model = s;
      } else if (type == "capacitance") {
        d.model = Capacitance{units::ul(e.number("volume_uL"))};
      } else {
        Fields::fail(e.at("type"), "unknown element type '" + type + "'");
      }
      e.finish();
      net.elements.push_back(std::move(d));
    }
  }
  if (f.has("sources")) {
    const json& sources = f.array("sources");
    for (std::size_t i = 0; i < sources.size(); ++i) {
      Fields s(sources[i], f.at("sources") + "/" + std::to_string(i));
      SourceDef d;
      d.name = s.text("name");
      d.node = s.text("node");
      d.source = parse_source(s);
      s.finish();
      net.sources.push_back(std::move(d));
    }
  }
  f.finish();
  return net;
}

SolverConfig parse_solver(Fields f) {
  SolverConfig c;
  c.dt_min = f.number_or("dt_min_s", c.dt_min);
  c.dt_max = f.number_or("dt_max_s", c.dt_max);
  c.rtol = f.number_or("rtol", c.rtol);
  c.atol = units::ul(f.number_or("atol_uL", units::to_ul(c.atol)));
  c.max_steps = f.integer_or("max_steps", c.max_steps);
  c.tau_snap_override = f.number_or("tau_snap_ms", 0.0) * 1e-3;
  f.finish();
  check_config(c);
  return c;
}

std::vector<double> parse_freqs(Fields f) {
  std::vector<double> out;
  if (f.has("freqs_Hz")) {
    const json& list = f.array("freqs_Hz");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_number()) Fields::fail(f.at("freqs_Hz") + "/" + std::to_string(i), "expected a number");
      out.push_back(list[i].get<double>());
    }
  } else {
    const double start = f.number("start_Hz");
    const double stop = f.number("stop_Hz");
    const double step = f.number("step_Hz");
    if (!(step > 0) || stop < start) {
      throw Error(Errc::kInvalidArgument, "sweep range needs step_Hz > 0 and stop_Hz >= start_Hz");
    }
    const long n = std::lround(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
  }
  f.finish();
  if (out.empty()) throw Error(Errc::kInvalidArgument, "sweep frequency list is empty");
  for (double v : out) {
    if (!(v > 0)) throw Error(Errc::kInvalidArgument, "sweep frequencies must be > 0");
  }
  return out;
}

void parse_analysis(Fields f, Scenario& sc) {
  if (f.has("pv_loop")) {
    Fields p = f.object("pv_loop");
    sc.pv_loop = PvRequest{p.text("element"), p.text("source")};
    p.finish();
  }
  if (f.has("kinematics")) {
    Fields k = f.object("kinematics");
    TipKinematics kin;
    kin.lateral_gain = units::mm(k.number("lateral_gain_mm"));
    kin.vertical_gain = units::mm(k.number("vertical_gain_mm"));
    kin.pillar_length = units::mm(k.number_or("pillar_length_mm", units::to_mm(kin.pillar_length)));
    k.finish();
    sc.kinematics = kin;
  }
  if (f.has("trajectory")) {
    Fields t = f.object("trajectory");
    sc.trajectory_element = t.text("element");
    t.finish();
  }
  if (f.has("gait")) {
    Fields g = f.object("gait");
    GaitRequest req;
    if (g.has("legs")) {
      const json& legs = g.array("legs");
      for (std::size_t i = 0; i < legs.size(); ++i) {
        if (!legs[i].is_string()) Fields::fail(g.at("legs") + "/" + std::to_string(i), "expected a string");
        req.legs.push_back(legs[i].get<std::string>());
      }
    }
    req.contact.contact_height = units::mm(g.number("contact_height_mm"));
    req.window_cycles = static_cast<int>(g.integer_or("window_cycles", req.window_cycles));
    g.finish();
    sc.gait = req;
  }
  if (f.has("sweep")) sc.sweep_freqs = parse_freqs(f.object("sweep"));
  f.finish();
}

void check_scenario(const Scenario& sc) {
  validate(sc.network);
  auto snap_element = [&](const std::string& name, const char* what) {
    const auto* e = sc.network.find_element(name);
    if (!e || !std::holds_alternative<SnapElement>(e->model)) {
      throw Error(Errc::kDanglingReference, std::string(what) + " names unknown snap element '" + name + "'");
    }
  };
  if (sc.pv_loop) {
    snap_element(sc.pv_loop->element, "pv_loop");
    bool found = false;
    for (const auto& s : sc.network.sources) {
      found = found || (s.name == sc.pv_loop->source && s.source.kind == SourceKind::kFlowRamp);
    }
    if (!found) {
      throw Error(Errc::kDanglingReference, "pv_loop names unknown FLOW_RAMP source '" + sc.pv_loop->source + "'");
    }
  }
  if (!sc.trajectory_element.empty()) {
    snap_element(sc.trajectory_element, "trajectory");
    if (!sc.kinematics) throw Error(Errc::kInvalidArgument, "trajectory requested without kinematics");
  }
  if (sc.gait) {
    if (!sc.kinematics) throw Error(Errc::kInvalidArgument, "gait requested without kinematics");
    for (const auto& leg : sc.gait->legs) snap_element(leg, "gait");
    if (sc.gait->window_cycles < 1 || sc.gait->window_cycles > sc.cycles) {
      throw Error(Errc::kInvalidArgument, "gait window_cycles must lie in [1, cycles]");
    }
  }
  if (!(sc.end_time() > 0)) throw Error(Errc::kInvalidArgument, "scenario has no positive duration");
}

}  // namespace

double Scenario::end_time() const {
  if (duration > 0) return duration;
  return cycles * drive_period(network);
}

json parse_json_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw Error(Errc::kParse, err.what());
  }
}

Scenario parse_scenario(const json& doc) {
  Scenario sc;
  sc.document = doc;
  Fields f(doc, "");
  if (!f.has("network")) Fields::fail("/network", "missing 'network' section");
  sc.name = f.text_or("name", "scenario");
  sc.network = parse_network(f.object("network"));
  if (f.has("solver")) sc.solver = parse_solver(f.object("solver"));
  sc.duration = f.number_or("duration_s", 0.0);
  sc.cycles = static_cast<int>(f.integer_or("cycles", sc.cycles));
  if (f.has("analysis")) parse_analysis(f.object("analysis"), sc);
  const long seed = f.integer_or("seed", 1);
  if (seed < 0) Fields::fail("/seed", "expected a non-negative integer");
  sc.seed = static_cast<std::uint64_t>(seed);
  f.finish();
  if (sc.gait && sc.gait->legs.empty()) {
    for (const auto& e : sc.network.elements) {
      if (std::holds_alternative<SnapElement>(e.model)) sc.gait->legs.push_back(e.name);
    }
  }
  check_scenario(sc);
  return sc;
}

Scenario parse_scenario_text(const std::string& text) { return parse_scenario(parse_json_text(text)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kParse, "cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path resolve_scenario(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  const char* env = std::getenv("SNAPNET_PRESET_DIR");
  const fs::path dir = env && *env ? fs::path(env) : fs::path(SNAPNET_PRESET_DIR);
  for (const fs::path& candidate : {dir / name_or_path, dir / (name_or_path + ".json")}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw Error(Errc::kParse, "no scenario file or preset named '" + name_or_path + "'");
}

Scenario with_frequency(const Scenario& sc, double f) {
  if (!(f > 0)) throw Error(Errc::kInvalidArgument, "frequency must be > 0");
  Scenario out = sc;
  bool any = false;
  for (std::size_t i = 0; i < out.network.sources.size(); ++i) {
    auto& s = out.network.sources[i].source;
    if (s.kind == SourceKind::kVent || s.frequency <= 0) continue;
    s.frequency = f;
    out.document["network"]["sources"][i]["frequency_Hz"] = f;
    any = true;
  }
  if (!any) throw Error(Errc::kInvalidArgument, "scenario has no periodic source to retune");
  out.duration = 0;
  out.document.erase("duration_s");
  validate(out.network);
  return out;
}

TargetsFile parse_targets(const json& doc, const json& scenario_doc) {
  TargetsFile tf;
  Fields f(doc, "");
  tf.name = f.text_or("name", "targets");
  const json& targets = f.array("targets");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Fields t(targets[i], "/targets/" + std::to_string(i));
    FitTarget ft;
    ft.name = t.text("metric");
    ft.value = t.number("value");
    ft.scale = t.number_or("scale", ft.value != 0 ? std::abs(ft.value) : 1.0);
    ft.weight = t.number_or("weight", 1.0);
    t.finish();
    tf.problem.targets.push_back(ft);
  }
  const json& params = f.array("parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string at = "/parameters/" + std::to_string(i);
    Fields p(params[i], at);
    FitParameter fp;
    const std::string pointer = p.text("pointer");
    fp.name = pointer;
    fp.lower = p.number("lower");
    fp.upper = p.number("upper");
    json::json_pointer ptr;
    try {
      ptr = json::json_pointer(pointer);
    } catch (const json::exception& err) {
      Fields::fail(at + "/pointer", err.what());
    }
    if (p.has("initial")) {
      fp.initial = p.number("initial");
    } else {
      if (!scenario_doc.contains(ptr) || !scenario_doc.at(ptr).is_number()) {
        throw Error(Errc::kDanglingReference, "parameter pointer " + pointer + " does not address a number in the scenario");
      }
      fp.initial = std::clamp(scenario_doc.at(ptr).get<double>(), fp.lower, fp.upper);
    }
    p.finish();
    tf.problem.parameters.push_back(fp);
    tf.pointers.push_back(pointer);
  }
  tf.problem.max_evals = static_cast<int>(f.integer_or("max_evals", tf.problem.max_evals));
  tf.problem.tol = f.number_or("tol", tf.problem.tol);
  tf.problem.restarts = static_cast<int>(f.integer_or("restarts", tf.problem.restarts));
  const long seed = f.integer_or("seed", 1);
  tf.problem.seed = static_cast<std::uint64_t>(seed < 0 ? 0 : seed);
  f.finish();

  // Threshold targets must describe an existing fold ordering.
  double through = NAN, back = NAN;
  for (const auto& t : tf.problem.targets) {
    if (t.name == "strong_snap_through_mbar") through = t.value;
    if (t.name == "strong_snap_back_mbar") back = t.value;
  }
  if (std::isfinite(through) && std::isfinite(back) && !(back < through)) {
    throw Error(Errc::kInfeasibleSpec,
                "target strong_snap_back_mbar must be below strong_snap_through_mbar");
  }
  check_problem(tf.problem);
  return tf;
}

json substitute(const json& scenario_doc, const std::vector<std::string>& pointers,
                const std::vector<double>& values) {
  json out = scenario_doc;
  for (std::size_t i = 0; i < pointers.size() && i < values.size(); ++i) {
    out[json::json_pointer(pointers[i])] = values[i];
  }
  return out;
}

}  // namespace snapnet
