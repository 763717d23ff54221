// Command-line front end: runs one pipeline stage of a scenario and writes its
// artifacts. Exit codes: 0 success, 1 solver failure, 2 configuration error.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "lowthrust/io.hpp"
#include "lowthrust/pipeline.hpp"
#include "lowthrust/scenario.hpp"

namespace fs = std::filesystem;
using namespace lowthrust;

namespace {

constexpr int kSolverFailure = 1;
constexpr int kConfigError = 2;
constexpr const char* kOutputEnv = "LOWTHRUST_OUTPUT_DIR";

fs::path output_dir(const std::string& flag, const Scenario& sc) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  if (!sc.output_dir.empty()) return sc.output_dir;
  return "lowthrust_out";
}

void apply_tol_override(Scenario& sc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ScenarioError("--tol-override expects KEY=VALUE, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string suffix = "tol_nd";
  if (key.size() < suffix.size() || key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0)
    throw ScenarioError("--tol-override only accepts tolerance keys (*.tol_nd, *.residual_tol_nd), got '" + key + "'");
  set_scenario_key(sc, key, assignment.substr(eq + 1));
}

void write_failure(const fs::path& out, Stage stage, const std::string& kind, const std::string& what) {
  try {
    fs::create_directories(out);
    Json d = make_document("failure");
    d["stage"] = stage_name(stage);
    d["kind"] = kind;
    d["report"] = what;
    write_json(out / ("failure_" + stage_name(stage) + ".json"), d);
  } catch (const std::exception&) {
    // the report still goes to stderr
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-thrust mission design in the Earth-Moon CRTBP"};
  std::string scenario_path, stage_str, out_flag;
  std::vector<std::string> overrides;
  bool quiet = false;
  app.add_option("--scenario", scenario_path, "scenario file")->required();
  app.add_option("--stage", stage_str,
                 "lagrange, orbit, family, manifold, heteroclinic, transfer or mission (chains all stages)")
      ->required();
  app.add_option("--out", out_flag, std::string("output directory (default: $") + kOutputEnv +
                                        ", then output.dir, then ./lowthrust_out)");
  app.add_option("--tol-override", overrides, "KEY=VALUE for a tolerance key, e.g. terminal.tol_nd=1e-7");
  app.add_flag("--quiet", quiet, "suppress progress messages");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  Scenario sc;
  Stage stage{};
  try {
    stage = parse_stage(stage_str);
    sc = load_scenario(scenario_path);
    for (const auto& o : overrides) apply_tol_override(sc, o);
    sc.validate();
  } catch (const ScenarioError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  }

  const fs::path out = output_dir(out_flag, sc);
  try {
    const auto outcome = run_stage(sc, stage, out, quiet ? nullptr : &std::cerr);
    for (const auto& a : outcome.artifacts) std::cout << a.string() << "\n";
    return 0;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing prerequisite: " << e.what() << "\n";
    return kConfigError;
  } catch (const ScenarioError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StageFailure& e) {
    std::cerr << "stage " << stage_name(e.stage()) << " failed: " << e.what() << "\n";
    write_failure(out, e.stage(), "solver", e.what());
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "stage " << stage_name(stage) << " failed: " << e.what() << "\n";
    write_failure(out, stage, "internal", e.what());
    return kSolverFailure;
  }
}
