#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lowthrust/io.hpp"
#include "lowthrust/pipeline.hpp"
#include "lowthrust/scenario.hpp"

using namespace lowthrust;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = LOWTHRUST_SOURCE_DIR;
const std::string kCli = LOWTHRUST_CLI_PATH;

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lowthrust_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

// Runs the CLI and returns its exit status; stderr goes to `err`.
int run_cli(const std::string& args, const fs::path& err, const std::string& env = "") {
  const std::string cmd = env + " '" + kCli + "' " + args + " > /dev/null 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every number must sit in a {"value", "unit"} pair, apart from the format version.
bool all_numbers_tagged(const Json& j, bool in_value = false) {
  if (j.is_number()) return in_value;
  if (j.is_array()) {
    for (const auto& e : j)
      if (!all_numbers_tagged(e, in_value)) return false;
    return true;
  }
  if (j.is_object()) {
    const bool tagged_pair = j.contains("value") && j.contains("unit");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "format_version") continue;
      if (!all_numbers_tagged(it.value(), tagged_pair && it.key() == "value")) return false;
    }
  }
  return true;
}

const char* kSmallScenario = R"(# planar test mission
mission.name = cli-test
mission.kind = lyapunov-lyapunov-2rev
mission.energy_nd = -1.5890
manifold.crossing_unstable = 2
manifold.crossing_stable = 2
manifold.fibers = 60
)";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("bundled scenarios parse") {
    for (const char* name : {"mission1_1rev.scn", "mission1_1rev_feasible.scn", "mission2_2rev.scn", "halo_halo.scn",
                             "halo_halo_feasible.scn"}) {
      CAPTURE(name);
      CHECK_NOTHROW(load_scenario(kSource / "scenarios" / name));
    }
    const auto m2 = load_scenario(kSource / "scenarios" / "mission2_2rev.scn");
    CHECK(m2.kind == MissionKind::lyapunov_2rev);
    CHECK(*m2.energy == -1.5890);
    CHECK(m2.extra_nodes == 5);
    CHECK(m2.crossing_unstable == 2);
    CHECK(m2.alpha == doctest::Approx(1.0 / 384402.0).epsilon(1e-15));
    const auto h = load_scenario(kSource / "scenarios" / "halo_halo.scn");
    CHECK(h.spatial());
    CHECK(*h.energy1 == -1.5939);
    CHECK(*h.energy2 == -1.5805);
    CHECK(h.thrust_start == 180.0);
  }

  TEST_CASE("scenario parser rejects bad input") {
    const std::string base = "mission.kind = lyapunov-lyapunov-1rev\nmission.energy_nd = -1.58\n";
    CHECK_NOTHROW(parse_scenario(base));
    CHECK_NOTHROW(parse_scenario(base + "  # comment only\n\nthrust.steps = 10   # trailing\n"));
    CHECK_THROWS_AS(parse_scenario(base + "mission.colour = red\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "thrust.target_newtons = -0.3\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "thrust.target_newtons = 0.3N\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "thrust.steps = 2.5\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "mission.energy_nd = -1.59\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "no equals sign\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "manifold.section = U4\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("mission.kind = lyapunov-lyapunov-1rev\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("mission.kind = halo-lyapunov\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "mission.z1_km = 8000\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("mission.kind = halo-halo\nmission.z1_km = 8000\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(base + "thrust.start_newtons = 0.1\n"), ScenarioError);
    try {
      parse_scenario(base + "mission.colour = red\n", "x.scn");
      FAIL("expected a ScenarioError");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("x.scn:3") != std::string::npos);
      CHECK(std::string(e.what()).find("mission.colour") != std::string::npos);
    }
  }

  TEST_CASE("stage names") {
    for (auto s : {Stage::lagrange, Stage::orbit, Stage::family, Stage::manifold, Stage::heteroclinic,
                   Stage::transfer, Stage::mission})
      CHECK(parse_stage(stage_name(s)) == s);
    CHECK_THROWS_AS(parse_stage("launch"), ScenarioError);
  }

  TEST_CASE("CSV rows follow the fixed column order") {
    CHECK(csv_header() == "t,x,y,z,vx,vy,vz,m,ux,uy,uz,u_norm,H");
    CsvRow r;
    r.t = 1.5;
    r.state = Eigen::Vector4d(1, 2, 3, 4);
    CHECK(csv_line(r) == "1.5,1,2,,3,4,,,,,,,");
    r.mass = 1500.0;
    r.control = Eigen::Vector2d(0.6, 0.8);
    r.hamiltonian = -0.25;
    CHECK(csv_line(r) == "1.5,1,2,,3,4,,1500,0.59999999999999998,0.80000000000000004,,1,-0.25");
  }

  TEST_CASE("artifact documents round-trip") {
    const auto dir = scratch("roundtrip");
    PeriodicOrbit o;
    o.initial_state = Eigen::Vector4d(0.8234, 0.0, 0.0, 0.1263);
    o.period = 2.6914;
    o.energy = -1.59;
    o.center = 1;
    Json d = make_document("thing");
    d["v"] = tagged(Eigen::VectorXd(o.initial_state), unit::normalized);
    write_json(dir / "thing.json", d);
    const Json back = read_json(dir / "thing.json", "thing");
    CHECK(untag_vector(back, "v") == o.initial_state);
    CHECK_THROWS_AS(read_json(dir / "thing.json", "other"), Error);
    CHECK_THROWS_AS(untag(back, "missing"), Error);
  }

  TEST_CASE("lagrange stage through the command line") {
    const auto dir = scratch("lagrange");
    const auto scn = write_file(dir / "s.scn", kSmallScenario);
    const auto err = dir / "err.txt";
    REQUIRE(run_cli("--scenario '" + scn.string() + "' --stage lagrange --quiet --out '" + (dir / "out").string() +
                        "'",
                    err) == 0);
    const Json d = read_json(dir / "out" / "lagrange.json", "lagrange");
    REQUIRE(d["points"].size() == 5);
    for (const auto& pt : d["points"]) CHECK(untag(pt, "field_residual") <= 1e-12);
    CHECK(all_numbers_tagged(d));
    CHECK(fs::exists(dir / "out" / "run_lagrange.json"));
  }

  TEST_CASE("stages chain through artifacts and are deterministic") {
    const auto dir = scratch("chain");
    const auto scn = write_file(dir / "s.scn", kSmallScenario);
    const auto err = dir / "err.txt";
    const std::string base = "--scenario '" + scn.string() + "' --quiet --out '" + (dir / "out").string() + "'";
    // a stage without its prerequisite names the stage to run
    CHECK(run_cli(base + " --stage heteroclinic", err) == 2);
    CHECK(slurp(err).find("--stage family") != std::string::npos);
    REQUIRE(run_cli(base + " --stage orbit", err) == 0);
    REQUIRE(run_cli(base + " --stage family", err) == 0);
    REQUIRE(run_cli(base + " --stage heteroclinic", err) == 0);
    const std::string first = slurp(dir / "out" / "heteroclinic.json");
    REQUIRE(run_cli(base + " --stage heteroclinic", err) == 0);
    CHECK(slurp(dir / "out" / "heteroclinic.json") == first);
    const Json d = read_json(dir / "out" / "heteroclinic.json", "heteroclinic");
    CHECK(all_numbers_tagged(d));
    const auto c = connection_from_json(d["connection"]);
    CHECK(c.revolutions == 2);
    CHECK(c.junction_mismatch <= 1e-9);
    CHECK(c.mission_time == doctest::Approx(c.total_time + 2.0).epsilon(1e-15));
    const std::string csv = slurp(dir / "out" / "heteroclinic.csv");
    CHECK(csv.rfind(csv_header() + "\n", 0) == 0);
    // the family orbits reload exactly
    const Json fam = read_json(dir / "out" / "family.json", "family");
    const auto o = orbit_from_json(fam["departure"]);
    CHECK(o.energy == doctest::Approx(-1.5890).epsilon(1e-12));
    CHECK(untag(fam["departure"], "closure_error") <= 1e-9);
  }

  TEST_CASE("output directory from the environment") {
    const auto dir = scratch("env");
    const auto scn = write_file(dir / "s.scn", kSmallScenario);
    const auto err = dir / "err.txt";
    REQUIRE(run_cli("--scenario '" + scn.string() + "' --stage lagrange --quiet", err,
                    "LOWTHRUST_OUTPUT_DIR='" + (dir / "from_env").string() + "'") == 0);
    CHECK(fs::exists(dir / "from_env" / "lagrange.json"));
  }

  TEST_CASE("configuration errors exit with status 2") {
    const auto dir = scratch("config");
    const auto err = dir / "err.txt";
    const auto out = " --quiet --out '" + (dir / "out").string() + "'";
    const auto bad = write_file(dir / "bad.scn", std::string(kSmallScenario) + "thrust.colour = blue\n");
    CHECK(run_cli("--scenario '" + bad.string() + "' --stage lagrange" + out, err) == 2);
    CHECK(slurp(err).find("thrust.colour") != std::string::npos);
    const auto good = write_file(dir / "good.scn", kSmallScenario);
    CHECK(run_cli("--scenario '" + good.string() + "' --stage launch" + out, err) == 2);
    CHECK(run_cli("--scenario '" + (dir / "absent.scn").string() + "' --stage lagrange" + out, err) == 2);
    CHECK(run_cli("--stage lagrange" + out, err) == 2);
    CHECK(run_cli("--scenario '" + good.string() + "' --stage lagrange --tol-override thrust.steps=3" + out, err) ==
          2);
    CHECK(run_cli("--scenario '" + good.string() + "' --stage lagrange --tol-override terminal.tol_nd=1e-7" + out,
                  err) == 0);
  }

  TEST_CASE("solver failures exit with status 1 and keep the report") {
    const auto dir = scratch("failure");
    const auto err = dir / "err.txt";
    // no L2 Lyapunov orbit exists below E(L2)
    const auto scn = write_file(dir / "low.scn",
                                "mission.kind = lyapunov-lyapunov-1rev\nmission.energy_nd = -1.5925\n");
    const std::string base = "--scenario '" + scn.string() + "' --quiet --out '" + (dir / "out").string() + "'";
    REQUIRE(run_cli(base + " --stage orbit", err) == 0);
    CHECK(run_cli(base + " --stage family", err) == 1);
    CHECK(slurp(err).find("E(L2)") != std::string::npos);
    const Json f = read_json(dir / "out" / "failure_family.json", "failure");
    CHECK(f["stage"] == "family");
    CHECK(f["report"].get<std::string>().find("E(L2)") != std::string::npos);
  }
}
