#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "snapnet/scenario.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using snapnet::read_file;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("snapnet_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  }
};

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + SNAPNET_CLI + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

json preset_doc(const std::string& name) {
  return snapnet::parse_json_text(read_file(snapnet::resolve_scenario(name)));
}

json one_parameter_targets(int max_evals) {
  return {{"targets", {{{"metric", "strong_snap_through_mbar"}, {"value", 41}, {"scale", 1}}}},
          {"parameters",
           {{{"pointer", "/network/elements/0/strong/p_snap_through_mbar"},
             {"lower", 30},
             {"upper", 50},
             {"initial", 36}}}},
          {"max_evals", max_evals},
          {"tol", 1e-8},
          {"seed", 3}};
}

}  // namespace

TEST_CASE("simulate writes trace, events and manifest") {
  Sandbox box;
  const fs::path out = box.dir / "sim";
  REQUIRE(run("simulate --scenario single_dome --out-dir " + quoted(out)) == 0);
  for (const char* f : {"trace.csv", "events.csv", "tips.csv", "report.json", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }
  const json man = json::parse(read_file(out / "manifest.json"));
  CHECK(man["command"] == "simulate");
  CHECK(man["config_sha256"].get<std::string>().size() == 64);
  CHECK(man["artifacts"].size() == 4);
  const json rep = json::parse(read_file(out / "report.json"));
  CHECK(rep["metrics"]["hysteresis_ratio"].get<double>() == doctest::Approx(0.366).epsilon(0.02));
}

TEST_CASE("output directory from the environment") {
  Sandbox box;
  const fs::path out = box.dir / "env_out";
  REQUIRE(run("simulate --scenario single_dome", "SNAPNET_OUT_DIR=" + quoted(out)) == 0);
  CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("exit codes") {
  Sandbox box;
  const std::string out = " --out-dir " + quoted(box.dir / "x");

  CHECK(run("") == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("simulate --scenario no_such_thing" + out) == 2);
  CHECK(run("simulate --scenario " + quoted(box.write("empty.json", "")) + out) == 2);
  CHECK(run("simulate --scenario " + quoted(box.write("broken.json", "{\"network\": [")) + out) == 2);
  CHECK(run("sweep --scenario quadruped_1hz --freqs ''" + out) == 2);
  CHECK(run("sweep --scenario quadruped_1hz --freqs 1,x" + out) == 2);

  json doc = preset_doc("single_dome");
  doc["network"]["edges"][0]["to"] = "nowhere";
  CHECK(run("simulate --scenario " + quoted(box.write("dangling.json", doc.dump())) + out) == 3);
  CHECK(run("sweep --scenario quadruped_1hz --freqs 1,-2" + out) == 3);

  doc = preset_doc("single_dome");
  doc["solver"] = {{"max_steps", 10}};
  CHECK(run("simulate --scenario " + quoted(box.write("short.json", doc.dump())) + out) == 4);

  const fs::path targets = box.write("budget.json", one_parameter_targets(2).dump());
  CHECK(run("fit --scenario single_dome --targets " + quoted(targets) + out) == 5);
  CHECK(fs::exists(box.dir / "x" / "fitted_scenario.json"));
}

TEST_CASE("empty scenario file names the missing section") {
  Sandbox box;
  const fs::path empty = box.write("empty.json", "\n");
  const fs::path err = box.dir / "err.txt";
  const std::string cmd = std::string(SNAPNET_CLI) + " simulate --scenario " + quoted(empty) + " --out-dir " +
                          quoted(box.dir / "o") + " 2>" + quoted(err);
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
  CHECK(read_file(err).find("network") != std::string::npos);
}

TEST_CASE("analyze an exported trace and a sensor log") {
  Sandbox box;
  const fs::path sim = box.dir / "sim";
  REQUIRE(run("simulate --scenario single_dome --out-dir " + quoted(sim)) == 0);
  REQUIRE(run("analyze --trace " + quoted(sim / "trace.csv") + " --out-dir " + quoted(sim)) == 0);
  const json a = json::parse(read_file(sim / "analysis.json"));
  CHECK(a["hysteresis"]["H"].get<double>() == doctest::Approx(0.366).epsilon(0.02));
  const json report = json::parse(read_file(sim / "report.json"));
  CHECK(a["hysteresis"]["H"].get<double>() ==
        doctest::Approx(report["metrics"]["hysteresis_ratio"].get<double>()).epsilon(1e-9));
  bool strong = false;
  for (const auto& row : a["thresholds"]) {
    if (row["lobe"] != "strong") continue;
    strong = true;
    CHECK(row["snap_through_mbar"][0].get<double>() == doctest::Approx(41).epsilon(1.0 / 41));
  }
  CHECK(strong);

  // Pressure-only log: one column of the same run.
  std::string log = "t_s,p_mbar\n";
  for (double t = 0; t < 2.3; t += 1e-3) {
    const double p = t < 1.2 ? 41.0 * t / 1.2 : 41.0 * (2.3 - t) / 1.1;
    log += std::to_string(t) + "," + std::to_string(t > 1.0 && t < 1.05 ? p - 5 : p) + "\n";
  }
  const fs::path logf = box.write("log.csv", log);
  CHECK(run("analyze --trace " + quoted(logf) + " --out-dir " + quoted(box.dir / "log")) == 0);
  CHECK(fs::exists(box.dir / "log" / "analysis.json"));

  CHECK(run("analyze --trace " + quoted(box.write("bad.csv", "time,p\n0,1\n")) + " --out-dir " +
            quoted(box.dir / "bad")) == 2);
}

TEST_CASE("fit recovers the value it was given") {
  Sandbox box;
  const fs::path targets = box.write("one.json", one_parameter_targets(80).dump());
  const fs::path out = box.dir / "fit";
  REQUIRE(run("fit --scenario single_dome --targets " + quoted(targets) + " --out-dir " + quoted(out)) == 0);
  const json rep = json::parse(read_file(out / "fit_report.json"));
  CHECK(rep["converged"] == true);
  CHECK(rep["parameters"][0]["value"].get<double>() == doctest::Approx(41).epsilon(0.01 / 41));
  CHECK(rep["objective"].get<double>() <= rep["initial_objective"].get<double>());

  // The fitted document is a valid scenario that reproduces the target.
  const fs::path resim = box.dir / "resim";
  REQUIRE(run("simulate --scenario " + quoted(out / "fitted_scenario.json") + " --out-dir " + quoted(resim)) == 0);
  const json again = json::parse(read_file(resim / "report.json"));
  CHECK(again["metrics"]["strong_snap_through_mbar"].get<double>() == doctest::Approx(41).epsilon(0.05 / 41));
}

TEST_CASE("identical inputs give identical bytes") {
  Sandbox box;
  const fs::path a = box.dir / "a", b = box.dir / "b";
  REQUIRE(run("sweep --scenario quadruped_1hz --freqs 1,3 --out-dir " + quoted(a)) == 0);
  REQUIRE(run("sweep --scenario quadruped_1hz --freqs 1,3 --out-dir " + quoted(b)) == 0);
  CHECK(read_file(a / "sweep.csv") == read_file(b / "sweep.csv"));
  CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));

  REQUIRE(run("simulate --scenario quadruped_1hz --out-dir " + quoted(a)) == 0);
  REQUIRE(run("simulate --scenario quadruped_1hz --out-dir " + quoted(b)) == 0);
  for (const char* f : {"trace.csv", "events.csv", "tips.csv", "manifest.json"}) {
    CAPTURE(f);
    CHECK(read_file(a / f) == read_file(b / f));
  }

  // Changing an option changes the config hash.
  const fs::path c = box.dir / "c";
  REQUIRE(run("sweep --scenario quadruped_1hz --freqs 1,3.5 --out-dir " + quoted(c)) == 0);
  CHECK(json::parse(read_file(a / "manifest.json"))["config_sha256"] !=
        json::parse(read_file(c / "manifest.json"))["config_sha256"]);
}
