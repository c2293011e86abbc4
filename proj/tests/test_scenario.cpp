#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "afc/errors.hpp"
#include "afc/plots.hpp"
#include "afc/runner.hpp"
#include "afc/scenario.hpp"

using namespace afc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("afc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kMinimalMech = R"({"plant": {"kind": "mech"}, "sim": {"t_end": 1.0}})";

}  // namespace

TEST_CASE("minimal mech scenario fills documented defaults") {
  const Scenario s = parse_scenario(kMinimalMech);
  CHECK(s.name == "scenario");
  CHECK(std::holds_alternative<MechPlant>(s.plant));
  REQUIRE(s.k1_values.size() == 1);
  CHECK(s.k1_values[0] == 1.0);
  CHECK(s.vartheta == 100.0);
  CHECK_FALSE(s.hydro_observer);
  REQUIRE(std::holds_alternative<ControllerGains>(s.drive));
  CHECK(std::get<ControllerGains>(s.drive).alpha1 == 100.0);
  CHECK(std::holds_alternative<ConstantRef>(s.reference));
  const auto& init = std::get<ExplicitInit>(s.init);
  CHECK(init.plant.isZero());
  CHECK(init.observer.size() == 3);
  CHECK(s.sim.dt == 0.0);  // resolved to the per-plant default at run time
  CHECK(s.sim.log_every == 100);
  CHECK(s.output.directory == "scenario");
}

TEST_CASE("k1 sweep list") {
  const Scenario s = parse_scenario(R"({
    "plant": {"kind": "lugre"},
    "observer": {"k1": [1, 3, 7]},
    "sim": {"t_end": 1.0}})");
  CHECK(s.k1_values == std::vector<double>{1.0, 3.0, 7.0});
}

TEST_CASE("hydro k1_auto requires theta2_upper") {
  const char* doc = R"({
    "plant": {"kind": "hydro"},
    "observer": {"k1_auto": true},
    "sim": {"t_end": 1.0}})";
  CHECK_THROWS_WITH_AS(parse_scenario(doc),
                       doctest::Contains("theta2_upper"), ConfigError);

  const Scenario ok = parse_scenario(R"({
    "plant": {"kind": "hydro"},
    "observer": {"k1_auto": true, "theta2_upper": 2.0, "alpha1_lyap": 2.0},
    "controller": {"open_loop": {"kind": "sinusoid"}},
    "sim": {"t_end": 1.0}})");
  CHECK(ok.k1_auto);
  CHECK(ok.hydro_observer);
}

TEST_CASE("pairing invariants") {
  CHECK_THROWS_WITH_AS(parse_scenario(R"({
    "plant": {"kind": "hydro"},
    "observer": {"x3hat": false},
    "sim": {"t_end": 1.0}})"),
                       doctest::Contains("x3hat"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(R"({
    "plant": {"kind": "mech"},
    "observer": {"x3hat": true},
    "sim": {"t_end": 1.0}})"),
                       doctest::Contains("x3hat"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(R"({
    "plant": {"kind": "mech"},
    "observer": {"k1_auto": true, "theta2_upper": 1.0},
    "sim": {"t_end": 1.0}})"),
                       doctest::Contains("k1_auto"), ConfigError);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(
      parse_scenario(R"({"plant": {"kind": "mech", "thetaX": 1}, "sim": {"t_end": 1}})"),
      doctest::Contains("plant.thetaX"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario(R"({"plant": {"kind": "mech"}, "sim": {"t_end": 1}, "plnt": {}})"),
      doctest::Contains("plnt"), ConfigError);
}

TEST_CASE("every misspelled key is rejected") {
  // Rename each object key in a full-featured document, one at a time; the
  // strict parser must refuse all of them.
  const std::string full = R"({
    "name": "fuzz",
    "plant": {"kind": "lugre", "sigma0": 1e5, "sigma1": 316.0, "sigma2": 0.4,
              "FC": 1.0, "FS": 1.5, "vS": 0.001},
    "observer": {"k1": [1, 7], "vartheta": 100.0},
    "controller": {"alpha1": 100.0, "alpha2": 100.0},
    "reference": {"kind": "chirp", "amplitude": 1.0, "rate": 0.01},
    "init": {"plant": [0.1, 0.5, 0.0], "observer": [0, 0, 0]},
    "sim": {"t_end": 1.0, "dt": 1e-5, "log_every": 100, "seed": 9},
    "output": {"directory": "fuzz", "emit_plots": false,
               "excitation": {"mode": "pe", "window": 0.5, "mu": 0.01}}})";
  REQUIRE_NOTHROW(parse_scenario(full));

  using nlohmann::json;
  std::function<void(json&, const json&)> visit_objects =
      [&](json& root, const json&) {};
  // Collect pointer paths of all object keys.
  std::vector<std::pair<std::string, std::string>> keys;  // (pointer, key)
  std::function<void(const json&, const std::string&)> collect =
      [&](const json& node, const std::string& ptr) {
        if (!node.is_object()) return;
        for (const auto& item : node.items()) {
          keys.emplace_back(ptr, item.key());
          collect(item.value(), ptr + "/" + item.key());
        }
      };
  const json doc = json::parse(full);
  collect(doc, "");
  CHECK(keys.size() > 25);

  for (const auto& [ptr, key] : keys) {
    json mutated = doc;
    json& parent = ptr.empty() ? mutated : mutated[json::json_pointer(ptr)];
    parent[key + "_typo"] = parent[key];
    parent.erase(key);
    CHECK_THROWS_AS(parse_scenario(mutated.dump()), ConfigError);
  }
}

TEST_CASE("serialize / parse round trip is the identity") {
  const std::vector<std::string> docs = {
      kMinimalMech,
      R"({
        "plant": {"kind": "hydro", "a1": 2.0, "a2": 0.5, "a3": 1.5,
                  "theta1": 0.4, "theta2": 1.0, "vartheta": 100.0},
        "observer": {"k1_auto": true, "theta2_upper": 2.0, "alpha1_lyap": 2.0},
        "controller": {"open_loop": {"kind": "sinusoid", "amplitude": 1.0,
                                     "omega": 1.0, "phase": 0.0}},
        "sim": {"t_end": 50.0, "seed": 3}})",
      R"({
        "name": "sweep",
        "plant": {"kind": "lugre"},
        "observer": {"k1": [1, 3, 7]},
        "reference": {"kind": "step_plus_ramp", "step_time": 1.0,
                      "step_height": 0.5, "ramp_start": 50.0,
                      "ramp_slope": 0.05, "blend": 0.1},
        "init": {"random_box": {"low": [-2, -2, -2, -2, -2, -2],
                                "high": [2, 2, 2, 2, 2, 2], "draws": 3}},
        "sim": {"t_end": 100.0, "dt": 1e-5, "seed": 1}})"};
  for (const auto& doc : docs) {
    const Scenario once = parse_scenario(doc);
    const std::string ser = serialize_scenario(once);
    const Scenario twice = parse_scenario(ser);
    CHECK(serialize_scenario(twice) == ser);
  }
}

TEST_CASE("bad JSON and bad values") {
  CHECK_THROWS_AS(parse_scenario("{"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scenario(R"({"sim": {"t_end": 1}})"),
                       doctest::Contains("plant"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario(R"({"plant": {"kind": "mech", "theta1": -1}, "sim": {"t_end": 1}})"),
      doctest::Contains("positive"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario(R"({"plant": {"kind": "mech"}, "observer": {"k1": "seven"},
                         "sim": {"t_end": 1}})"),
      doctest::Contains("observer.k1"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scenario(R"({"plant": {"kind": "mech"}, "init": {"plant": [1]},
                         "sim": {"t_end": 1}})"),
      doctest::Contains("init.plant"), ConfigError);
}

TEST_CASE("run_scenario writes logs, metrics and a verifiable manifest") {
  const fs::path dir = fresh_dir("run");
  const Scenario s = parse_scenario(R"({
    "name": "smoke",
    "plant": {"kind": "mech"},
    "observer": {"k1": [1, 3]},
    "reference": {"kind": "chirp"},
    "init": {"plant": [0.1, 0.5]},
    "sim": {"t_end": 0.5, "dt": 1e-4, "log_every": 10, "seed": 5},
    "output": {"emit_plots": true,
               "excitation": {"mode": "pe", "window": 0.2, "mu": 1e-6}}})");
  CHECK(run_scenario(s, dir, 2) == 0);

  const fs::path base = dir / "smoke";
  for (const char* f :
       {"k1_1/log.csv", "k1_1/metrics.json", "k1_1/excitation.csv",
        "k1_3/log.csv", "comparison_metrics.json", "manifest.json",
        "fig_tracking.py", "fig_control.py"}) {
    CHECK(fs::exists(base / f));
  }

  // Manifest hashes must match the files on disk.
  const auto manifest = nlohmann::json::parse(slurp(base / "manifest.json"));
  for (const auto& run : manifest.at("runs")) {
    for (const auto& item : run.at("files").items()) {
      CHECK(sha256_file(base / item.key()) == item.value().get<std::string>());
    }
  }

  // Re-running with the same seed reproduces identical artifact hashes.
  const fs::path dir2 = fresh_dir("run2");
  CHECK(run_scenario(s, dir2, 1) == 0);
  const auto manifest2 = nlohmann::json::parse(slurp(dir2 / "smoke" / "manifest.json"));
  CHECK(manifest.at("runs") == manifest2.at("runs"));

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("diverging run flushes a partial log and reports exit 3") {
  const fs::path dir = fresh_dir("diverge");
  const Scenario s = parse_scenario(R"({
    "name": "boom",
    "plant": {"kind": "mech"},
    "controller": {"open_loop": {"kind": "constant", "value": 0.0}},
    "init": {"plant": [0.0, 1.0]},
    "sim": {"t_end": 20000.0, "dt": 10.0, "log_every": 1}})");
  CHECK(run_scenario(s, dir, 1) == 3);
  const std::string log = slurp(dir / "boom" / "run" / "log.csv");
  CHECK(log.find("# DIVERGED at t=") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("random-box init fans out into seeded draws") {
  const fs::path dir = fresh_dir("draws");
  const Scenario s = parse_scenario(R"({
    "name": "box",
    "plant": {"kind": "mech"},
    "controller": {"open_loop": {"kind": "sinusoid"}},
    "init": {"random_box": {"low": [-2, -2, -2, -2, -2],
                            "high": [2, 2, 2, 2, 2], "draws": 3}},
    "sim": {"t_end": 0.2, "dt": 1e-4, "seed": 11}})");
  CHECK(run_scenario(s, dir, 2) == 0);
  for (const char* f : {"draw0/log.csv", "draw1/log.csv", "draw2/log.csv"}) {
    CHECK(fs::exists(dir / "box" / f));
  }
  // Draw initial conditions actually differ and sit inside the box.
  const TrajectoryLog l0 = read_trajectory_csv(dir / "box" / "draw0" / "log.csv");
  const TrajectoryLog l1 = read_trajectory_csv(dir / "box" / "draw1" / "log.csv");
  CHECK(l0.data(0, l0.require_col("x1")) != l1.data(0, l1.require_col("x1")));
  for (const auto* l : {&l0, &l1}) {
    CHECK(std::abs(l->data(0, l->require_col("x1"))) <= 2.0);
    CHECK(std::abs(l->data(0, l->require_col("x2"))) <= 2.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("analyze_log recovers vartheta-consistent reports from a CSV") {
  const fs::path dir = fresh_dir("analyze");
  const Scenario s = parse_scenario(R"({
    "name": "ana",
    "plant": {"kind": "mech"},
    "reference": {"kind": "chirp"},
    "init": {"plant": [0.1, 0.5]},
    "sim": {"t_end": 2.0, "dt": 1e-3, "log_every": 1}})");
  REQUIRE(run_scenario(s, dir, 1) == 0);
  const TrajectoryLog log = read_trajectory_csv(dir / "ana" / "run" / "log.csv");
  CHECK_FALSE(log.scenario_echo.empty());

  ExcitationSpec pe{"pe", 0.5, 1e-9, 0.1, 0.0, 0.0};
  const ExcitationReport rep = analyze_log(log, pe, 100.0);
  CHECK(rep.pe_verdict.has_value());
  CHECK_FALSE(rep.windows.empty());

  ExcitationSpec cons{"conservative", 0.0, 0.0, 0.0, 0.0, 0.5};
  const ExcitationReport rc = analyze_log(log, cons, 100.0);
  CHECK(rc.terms.size() == 4);

  const fs::path report = dir / "report.csv";
  write_excitation_csv(rep, pe, report);
  CHECK(slurp(report).find("index,t_start,t_end,lambda_min") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("plot scripts: emission and missing-column errors") {
  const fs::path dir = fresh_dir("plots");
  const Scenario s = parse_scenario(R"({
    "name": "p",
    "plant": {"kind": "mech"},
    "reference": {"kind": "chirp"},
    "init": {"plant": [0.1, 0.5]},
    "sim": {"t_end": 0.2, "dt": 1e-4}})");
  REQUIRE(run_scenario(s, dir, 1) == 0);

  const PlotRun run{"k1_1", dir / "p" / "run" / "log.csv", {}};
  const fs::path script = dir / "fig_tracking.py";
  emit_plot_script("tracking", {run}, script);
  const std::string text = slurp(script);
  CHECK(text.find("matplotlib") != std::string::npos);
  CHECK(text.find("log.csv") != std::string::npos);

  // A log without the required columns is refused.
  const fs::path crippled = dir / "crippled.csv";
  std::ofstream(crippled) << "t,x1\n0,0\n1,1\n";
  CHECK_THROWS_WITH_AS(emit_plot_script("tracking", {{"bad", crippled, {}}}, script),
                       doctest::Contains("lacks column"), ConfigError);
  CHECK_THROWS_AS(emit_plot_script("excitation", {run}, script), ConfigError);
  CHECK_THROWS_AS(emit_plot_script("nosuch", {run}, script), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("shipped example scenarios parse cleanly") {
  const fs::path dir = fs::path(AFC_SOURCE_DIR) / "scenarios";
  REQUIRE(fs::exists(dir));
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    ++n;
    CHECK_NOTHROW(parse_scenario(slurp(entry.path())));
  }
  CHECK(n >= 4);
}
