// snapnet: scenario-driven runs of the snap-through network simulator.
//
//   snapnet simulate --scenario single_dome
//   snapnet sweep    --scenario freq_sweep --freqs 1,2,3,4
//   snapnet analyze  --trace out/trace.csv
//   snapnet fit      --scenario single_dome --targets fig10
//
// Exit codes: 0 ok, 2 parse/schema, 3 validation, 4 solver, 5 fit hit max_evals.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "snapnet/manifest.hpp"
#include "snapnet/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace snapnet;

namespace {

struct Options {
  std::string scenario;
  std::string targets;
  std::string trace;
  std::string out_dir;
  std::string freqs;
  bool freqs_given = false;
  long seed = -1;
  double tol = 0;
};

int exit_code(Errc code) {
  switch (code) {
    case Errc::kParse:
    case Errc::kSchema:
      return 2;
    case Errc::kStepFailure:
    case Errc::kNonfiniteState:
    case Errc::kEvaluatorFailure:
      return 4;
    default:
      return 3;
  }
}

fs::path output_dir(const Options& o) {
  fs::path dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("SNAPNET_OUT_DIR");
    dir = env && *env ? env : "snapnet_out";
  }
  fs::create_directories(dir);
  return dir;
}

template <typename Fn>
fs::path write_file(const fs::path& dir, const std::string& name, Fn&& body) {
  const fs::path path = dir / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::kInvalidArgument, "cannot write '" + path.string() + "'");
  body(os);
  return path;
}

json metrics_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::vector<double> parse_freq_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const double f = std::stod(cell, &used);
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      out.push_back(f);
    } catch (const std::exception&) {
      throw Error(Errc::kParse, "--freqs: not a number '" + cell + "'");
    }
  }
  if (out.empty()) throw Error(Errc::kParse, "--freqs: empty frequency list");
  for (double f : out) {
    if (!(f > 0)) throw Error(Errc::kInvalidArgument, "--freqs: frequencies must be > 0");
  }
  return out;
}

struct Loaded {
  std::string bytes;
  Scenario scenario;
};

Loaded load_scenario(const Options& o) {
  Loaded l;
  l.bytes = read_file(resolve_scenario(o.scenario));
  l.scenario = parse_scenario_text(l.bytes);
  if (o.tol > 0) {
    l.scenario.solver.rtol = o.tol;
    check_config(l.scenario.solver);
  }
  if (o.seed >= 0) l.scenario.seed = static_cast<std::uint64_t>(o.seed);
  return l;
}

json options_json(const Options& o) {
  json j = json::object();
  if (o.tol > 0) j["tol"] = o.tol;
  if (o.seed >= 0) j["seed"] = o.seed;
  if (o.freqs_given) j["freqs"] = o.freqs;
  return j;
}

json report_json(const RunReport& r) {
  json j;
  j["metrics"] = metrics_json(r.metrics);
  j["notes"] = r.notes;
  json th = json::array();
  for (const auto& l : r.thresholds) {
    json row{{"element", l.element}, {"lobe", std::string(to_string(l.lobe))}};
    row["snap_through_mbar"] = json::array();
    row["snap_back_mbar"] = json::array();
    for (double p : l.snap_through) row["snap_through_mbar"].push_back(units::to_mbar(p));
    for (double p : l.snap_back) row["snap_back_mbar"].push_back(units::to_mbar(p));
    th.push_back(row);
  }
  j["thresholds"] = th;
  if (r.gait) {
    json phases = json::array();
    for (const auto& leg : r.gait->phases) {
      json iv = json::array();
      for (const auto& i : leg.intervals) iv.push_back({i.start, i.end});
      phases.push_back({{"leg", leg.leg}, {"intervals", iv}});
    }
    j["gait"] = {{"regime", std::string(to_string(r.gait->regime))},
                 {"no_events", r.gait->no_events},
                 {"phases", phases}};
  }
  return j;
}

int cmd_simulate(const Options& o) {
  const Loaded in = load_scenario(o);
  const RunReport r = run_scenario(in.scenario);
  const fs::path dir = output_dir(o);
  Manifest man;
  man.command = "simulate";
  man.inputs = {{"scenario", in.bytes}};
  man.options = options_json(o);
  man.parameters = in.scenario.document;
  man.artifacts.push_back(write_file(dir, "trace.csv", [&](std::ostream& os) { csv::write_trace(os, r.trace); }));
  man.artifacts.push_back(
      write_file(dir, "events.csv", [&](std::ostream& os) { csv::write_events(os, r.trace.events); }));
  if (!r.tips.empty()) {
    man.artifacts.push_back(write_file(dir, "tips.csv", [&](std::ostream& os) { csv::write_tips(os, r.tips); }));
  }
  man.artifacts.push_back(
      write_file(dir, "report.json", [&](std::ostream& os) { os << report_json(r).dump(2) << '\n'; }));
  man.write(dir / "manifest.json");
  std::cout << "simulated " << in.scenario.name << ": " << r.trace.samples() << " samples, "
            << r.trace.events.size() << " events -> " << dir.string() << '\n';
  for (const auto& n : r.notes) std::cout << "note: " << n << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  const Loaded in = load_scenario(o);
  const std::vector<double> freqs = o.freqs_given ? parse_freq_list(o.freqs) : in.scenario.sweep_freqs;
  if (freqs.empty()) throw Error(Errc::kParse, "no frequencies: pass --freqs or add analysis.sweep");
  const auto rows = run_sweep(in.scenario, freqs);
  const fs::path dir = output_dir(o);
  Manifest man;
  man.command = "sweep";
  man.inputs = {{"scenario", in.bytes}};
  man.options = options_json(o);
  man.parameters = in.scenario.document;
  man.artifacts.push_back(write_file(dir, "sweep.csv", [&](std::ostream& os) { csv::write_sweep(os, rows); }));
  man.write(dir / "manifest.json");
  for (const auto& r : rows) {
    std::cout << csv::number(r.f_hz) << " Hz: " << csv::number(units::to_mm(r.speed)) << " mm/s, "
              << to_string(r.regime) << '\n';
  }
  return 0;
}

int cmd_analyze(const Options& o) {
  const std::string bytes = read_file(o.trace);
  std::istringstream is(bytes);
  const csv::Table table = csv::read_table(is);
  json report;
  std::vector<std::pair<std::string, std::string>> inputs{{"trace", bytes}};

  if (table.header == std::vector<std::string>{"t_s", "p_mbar"}) {
    PressureLog log;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      try {
        log.t.push_back(std::stod(table.rows[r][0]));
        log.p.push_back(units::mbar(std::stod(table.rows[r][1])));
      } catch (const std::exception&) {
        throw Error(Errc::kSchema, "row " + std::to_string(r + 1) + ": not a number");
      }
    }
    report["notes"] = json::array({"pressure-only log: PV work needs volume data and was skipped"});
    try {
      const auto th = detect_thresholds(log);
      json through = json::array(), back = json::array();
      for (double p : th.snap_through) through.push_back(units::to_mbar(p));
      for (double p : th.snap_back) back.push_back(units::to_mbar(p));
      report["thresholds"] = {{"snap_through_mbar", through}, {"snap_back_mbar", back}};
    } catch (const Error& err) {
      if (err.code() != Errc::kNoEvents) throw;
      report["thresholds"] = "NO_EVENTS";
    }
  } else {
    const csv::TraceColumns cols = csv::parse_trace(table);
    // The scenario echo in the run's manifest tells which node each element
    // sits on and how the pump delivered volume.
    std::optional<Scenario> sc;
    if (!o.scenario.empty()) {
      const std::string sbytes = read_file(resolve_scenario(o.scenario));
      sc = parse_scenario_text(sbytes);
      inputs.push_back({"scenario", sbytes});
    } else if (const fs::path man = fs::path(o.trace).parent_path() / "manifest.json"; fs::exists(man)) {
      const std::string mbytes = read_file(man);
      sc = parse_scenario(parse_json_text(mbytes).at("parameters"));
      inputs.push_back({"manifest", mbytes});
    }
    std::map<std::string, std::string> nodes;
    if (sc) {
      for (const auto& e : sc->network.elements) nodes[e.name] = e.node;
    }
    const auto events = csv::events_from_columns(cols, nodes);
    json notes = json::array();
    try {
      const auto th = detect_thresholds(events);
      json rows = json::array();
      for (const auto& l : th) {
        json row{{"element", l.element}, {"lobe", std::string(to_string(l.lobe))}};
        row["snap_through_mbar"] = json::array();
        row["snap_back_mbar"] = json::array();
        for (double p : l.snap_through) row["snap_through_mbar"].push_back(units::to_mbar(p));
        for (double p : l.snap_back) row["snap_back_mbar"].push_back(units::to_mbar(p));
        rows.push_back(row);
      }
      report["thresholds"] = rows;
    } catch (const Error& err) {
      if (err.code() != Errc::kNoEvents) throw;
      report["thresholds"] = "NO_EVENTS";
    }
    if (sc && sc->pv_loop) {
      const auto node = std::find(cols.nodes.begin(), cols.nodes.end(), nodes[sc->pv_loop->element]);
      if (node == cols.nodes.end()) {
        throw Error(Errc::kSchema, "missing column 'p_" + nodes[sc->pv_loop->element] + "_mbar'");
      }
      const auto& p = cols.pressure[static_cast<std::size_t>(node - cols.nodes.begin())];
      const HysteresisReport h = loop_work(scenario_pv_loop(*sc, cols.t, p));
      report["hysteresis"] = {{"W_in_J", h.w_in}, {"W_out_J", h.w_out}, {"H", h.ratio}};
    } else {
      notes.push_back("no scenario with a pv_loop request: PV work skipped");
    }
    if (sc && sc->gait) {
      try {
        const double period = drive_period(sc->network);
        const double t_end = cols.t.back();
        const double t0 = t_end - sc->gait->window_cycles * period;
        json phases = json::array();
        for (const auto& leg : phase_diagram(events, period, sc->gait->legs, t0, t_end - period)) {
          json iv = json::array();
          for (const auto& i : leg.intervals) iv.push_back({i.start, i.end});
          phases.push_back({{"leg", leg.leg}, {"intervals", iv}});
        }
        report["phases"] = phases;
      } catch (const Error& err) {
        notes.push_back(std::string("phase_diagram: ") + err.what());
      }
    }
    report["notes"] = notes;
  }

  const fs::path dir = output_dir(o);
  Manifest man;
  man.command = "analyze";
  man.inputs = inputs;
  man.options = options_json(o);
  man.artifacts.push_back(
      write_file(dir, "analysis.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; }));
  man.write(dir / "analysis_manifest.json");
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_fit(const Options& o) {
  const Loaded in = load_scenario(o);
  const std::string tbytes = read_file([&] {
    if (fs::exists(o.targets)) return fs::path(o.targets);
    const char* env = std::getenv("SNAPNET_TARGETS_DIR");
    const fs::path dir = env && *env ? fs::path(env) : fs::path(SNAPNET_TARGETS_DIR);
    const fs::path p = dir / (o.targets + ".json");
    if (!fs::exists(p)) throw Error(Errc::kParse, "no targets file or preset named '" + o.targets + "'");
    return p;
  }());
  TargetsFile tf = parse_targets(parse_json_text(tbytes), in.scenario.document);
  if (o.seed >= 0) tf.problem.seed = static_cast<std::uint64_t>(o.seed);
  if (o.tol > 0) tf.problem.tol = o.tol;

  // The solver tolerance override belongs to simulate; fit keeps the file's.
  Scenario sc = in.scenario;
  sc.solver = parse_scenario_text(in.bytes).solver;
  const FitOutcome out = fit_scenario(sc, tf);

  const fs::path dir = output_dir(o);
  json report;
  report["converged"] = out.result.converged;
  report["evaluations"] = out.result.evaluations;
  report["objective"] = out.result.objective;
  report["initial_objective"] = out.result.initial_objective;
  json params = json::array();
  for (std::size_t i = 0; i < tf.pointers.size(); ++i) {
    params.push_back({{"pointer", tf.pointers[i]}, {"value", out.result.x[i]}});
  }
  report["parameters"] = params;
  json targets = json::array();
  for (std::size_t i = 0; i < tf.problem.targets.size(); ++i) {
    const auto& t = tf.problem.targets[i];
    json row{{"metric", t.name}, {"target", t.value}};
    if (i < out.result.metrics.size()) {
      row["value"] = out.result.metrics[i];
      row["residual"] = out.result.residuals[i];
    }
    targets.push_back(row);
  }
  report["targets"] = targets;

  Manifest man;
  man.command = "fit";
  man.inputs = {{"scenario", in.bytes}, {"targets", tbytes}};
  man.options = options_json(o);
  man.parameters = out.fitted;
  man.artifacts.push_back(
      write_file(dir, "fitted_scenario.json", [&](std::ostream& os) { os << out.fitted.dump(2) << '\n'; }));
  man.artifacts.push_back(
      write_file(dir, "fit_report.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; }));
  man.artifacts.push_back(write_file(dir, "fit_log.csv", [&](std::ostream& os) {
    os << "eval";
    for (const auto& p : tf.pointers) os << ',' << p;
    for (const auto& t : tf.problem.targets) os << ',' << t.name;
    os << ",objective\n";
    for (std::size_t k = 0; k < out.result.log.size(); ++k) {
      const auto& e = out.result.log[k];
      os << k;
      for (double v : e.x) os << ',' << csv::number(v);
      for (double v : e.metrics) os << ',' << csv::number(v);
      os << ',' << csv::number(e.objective) << '\n';
    }
  }));
  man.write(dir / "manifest.json");
  std::cout << report.dump(2) << '\n';
  if (!out.result.converged) {
    std::cerr << "fit: MAX_EVALS_EXCEEDED after " << out.result.evaluations
              << " evaluations; best-so-far written\n";
    return 5;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pneumatic snap-through network simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", o.out_dir, "Output directory (default $SNAPNET_OUT_DIR or ./snapnet_out)");
    sub->add_option("--seed", o.seed, "Random seed override");
    sub->add_option("--tol", o.tol, "Solver rtol (simulate/sweep) or objective tolerance (fit)");
  };
  auto* simulate = app.add_subcommand("simulate", "Run one scenario and export trace, events and report");
  simulate->add_option("--scenario", o.scenario, "Scenario file or preset name")->required();
  add_common(simulate);

  auto* sweep = app.add_subcommand("sweep", "Speed and regime against drive frequency");
  sweep->add_option("--scenario", o.scenario, "Scenario file or preset name")->required();
  sweep->add_option("--freqs", o.freqs, "Comma-separated frequencies in Hz");
  add_common(sweep);

  auto* analyze = app.add_subcommand("analyze", "Hysteresis, thresholds and phases from a trace CSV");
  analyze->add_option("--trace", o.trace, "Trace CSV or sensor log (t_s,p_mbar)")->required();
  analyze->add_option("--scenario", o.scenario, "Scenario (default: manifest.json next to the trace)");
  add_common(analyze);

  auto* fit = app.add_subcommand("fit", "Fit scenario parameters to targets");
  fit->add_option("--scenario", o.scenario, "Scenario file or preset name")->required();
  fit->add_option("--targets", o.targets, "Targets file or preset name")->required();
  add_common(fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }
  o.freqs_given = sweep->count("--freqs") > 0;

  try {
    if (*simulate) return cmd_simulate(o);
    if (*sweep) return cmd_sweep(o);
    if (*analyze) return cmd_analyze(o);
    if (*fit) return cmd_fit(o);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return exit_code(err.code());
  } catch (const json::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  }
  return 0;
}
