#include "lowthrust/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "lowthrust/io.hpp"

namespace lowthrust {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

Eigen::VectorXd lift(const Eigen::Vector4d& v) { return Eigen::VectorXd(v); }

}  // namespace

OrbitPair seed_orbits(const Scenario& sc) {
  const auto& p = sc.system;
  if (!sc.spatial()) {
    return {correct_orbit(p, richardson_guess(p, 1, sc.lyapunov_seed_amplitude, Dimension::planar)),
            correct_orbit(p, richardson_guess(p, 2, sc.lyapunov_seed_amplitude, Dimension::planar))};
  }
  auto halo = [&](int center, const std::optional<double>& z_km) {
    const double z = z_km.value_or(sc.halo_seed_z_km) * 1e3 / p.l_star;
    return correct_orbit(p, richardson_guess(p, center, z, Dimension::spatial), FixedCoordinate::z0);
  };
  return {halo(1, sc.z1_km), halo(2, sc.z2_km)};
}

OrbitPair mission_orbits(const Scenario& sc, const OrbitPair& seeds, FamilyReport* dep, FamilyReport* arr) {
  const auto& p = sc.system;
  const auto sched = ContinuationSchedule::uniform(sc.family_steps);
  auto continued = [&](const PeriodicOrbit& seed, const std::optional<double>& e, FamilyReport* rep) {
    if (!e) return seed;
    const double e_point = energy(p, lift(lagrange_points(p.mu)[seed.center - 1]));
    if (*e <= e_point) {
      std::ostringstream msg;
      msg.precision(10);
      msg << "energy " << *e << " is not above E(L" << seed.center << ") = " << e_point
          << "; no periodic orbit about L" << seed.center << " exists at this energy";
      throw PreconditionError(msg.str());
    }
    return continue_family_energy(p, seed, *e, sched, rep);
  };
  if (!sc.spatial()) return {continued(seeds.departure, sc.energy, dep), continued(seeds.arrival, sc.energy, arr)};
  return {continued(seeds.departure, sc.energy1, dep), continued(seeds.arrival, sc.energy2, arr)};
}

Connection connect_orbits(const Scenario& sc, const OrbitPair& orbits) {
  const auto& p = sc.system;
  Connection c;
  if (!sc.spatial()) {
    HeteroclinicOptions opt;
    opt.alpha = sc.alpha;
    opt.n_grid = sc.fibers;
    opt.section = sc.section;
    opt.crossing_unstable = sc.crossing_unstable;
    opt.crossing_stable = sc.crossing_stable;
    opt.horizon = sc.horizon;
    const auto h = find_heteroclinic(p, orbits.departure, orbits.arrival, opt);
    c.departure_phase = h.departure_phase;
    c.arrival_phase = h.arrival_phase;
    c.departure_seed = h.departure_seed;
    c.arrival_seed = h.arrival_seed;
    c.time_unstable = h.time_unstable;
    c.time_stable = h.time_stable;
    c.total_time = h.total_time;
    c.junction_mismatch = h.junction_mismatch;
    c.windings = h.windings;
    c.revolutions = h.revolutions;
    c.pieces.push_back(h.trajectory);
  } else {
    FiberOptions fo;
    fo.horizon = sc.horizon;
    fo.section = sc.section;
    fo.stop_after = sc.crossing_unstable;
    const auto f1 = globalize(p, orbits.departure, sc.fibers, Stability::unstable, Branch::plus, sc.alpha, fo);
    fo.stop_after = sc.crossing_stable;
    const auto f2 = globalize(p, orbits.arrival, sc.fibers, Stability::stable, Branch::minus, sc.alpha, fo);
    const auto b = closest_approach(section_cut(f1, sc.section, sc.crossing_unstable),
                                    section_cut(f2, sc.section, sc.crossing_stable));
    const auto& u = f1[b.fiber_1];
    const auto& s = f2[b.fiber_2];
    c.bridged = true;
    c.departure_phase = u.phase;
    c.arrival_phase = s.phase;
    c.departure_seed = u.seed;
    c.arrival_seed = s.seed;
    c.time_unstable = b.t_1;
    c.time_stable = -b.t_2;
    c.total_time = c.time_unstable + c.time_stable;
    c.bridge_point_1 = b.point_1;
    c.bridge_point_2 = b.point_2;
    c.gap = b.gap;
    c.fiber_1 = b.fiber_1;
    c.fiber_2 = b.fiber_2;
    c.pieces.push_back(u.trajectory);
    c.pieces.push_back(s.trajectory);
  }
  c.mission_time = c.total_time + 2.0 * sc.anchor_orbit_time;
  return c;
}

std::vector<LocalLeg> solve_local_legs(const Scenario& sc, const OrbitPair& orbits, const Connection& c) {
  const auto& p = sc.system;
  const double eps = p.epsilon_for(sc.thrust_start);
  const auto sched = ContinuationSchedule::uniform(sc.transfer_steps);
  const int n = static_cast<int>(orbits.departure.initial_state.size());
  std::vector<LocalLeg> legs;
  double mass = p.m0;
  auto add = [&](const std::string& role, const Anchors& a) {
    LocalLeg leg;
    leg.role = role;
    leg.anchors = a;
    leg.solution = solve_local_transfer(p, a, mass, eps, sched);
    leg.costs = arc_costs(p, leg.solution.initial, leg.solution.duration, eps, sc.thrust_start);
    mass = leg.solution.final[n];
    legs.push_back(std::move(leg));
  };
  add("departure", build_anchor_points(p, orbits.departure, c.departure_seed, AnchorSide::departure,
                                       sc.anchor_orbit_time, sc.anchor_manifold_time));
  if (c.bridged) {
    Anchors ab;
    const double half = 0.5 * sc.bridge_time;
    ab.start = crtbp_flow(p.mu, c.bridge_point_1, 0.0, -half);
    ab.end = crtbp_flow(p.mu, c.bridge_point_2, 0.0, half);
    ab.duration = sc.bridge_time;
    add("bridge", ab);
  }
  add("arrival", build_anchor_points(p, orbits.arrival, c.arrival_seed, AnchorSide::arrival, sc.anchor_orbit_time,
                                     sc.anchor_manifold_time));
  return legs;
}

MissionRun run_mission(const Scenario& sc, const OrbitPair& orbits, const Connection& c,
                       const std::vector<LocalLeg>& legs, std::ostream* log) {
  const auto& p = sc.system;
  const std::size_t want = c.bridged ? 3 : 2;
  if (legs.size() != want) throw PreconditionError("the connection needs " + std::to_string(want) + " local legs");
  const double tm = sc.anchor_manifold_time;
  std::vector<MissionSegment> segments;
  auto free_arc = [&](double duration) {
    if (!(duration > 0))
      throw PreconditionError("anchor times leave no free arc; shorten anchors.manifold_time_nd");
    segments.push_back(MissionSegment::free(duration, 1 + sc.extra_nodes));
  };
  segments.push_back(MissionSegment::controlled(legs[0].solution));
  if (c.bridged) {
    const double half = 0.5 * sc.bridge_time;
    free_arc(c.time_unstable - tm - half);
    segments.push_back(MissionSegment::controlled(legs[1].solution));
    free_arc(c.time_stable - tm - half);
  } else {
    free_arc(c.total_time - 2.0 * tm);
  }
  segments.push_back(MissionSegment::controlled(legs.back().solution));

  MissionRun run;
  run.guess = assemble_initial_Z(p, legs[0].anchors.start, p.m0, segments);
  const double dep = legs.front().anchors.orbit_phase - sc.anchor_orbit_time;
  const double arr = legs.back().anchors.orbit_phase + sc.anchor_orbit_time;
  run.guess.structure.start = orbit_state_at(p, orbits.departure, dep);
  run.guess.structure.target = orbit_state_at(p, orbits.arrival, arr);

  const Eigen::VectorXd r0 = multishoot_residual(p, run.guess.z, run.guess.structure);
  run.initial_residual = r0.lpNorm<Eigen::Infinity>();
  const ShootingLayout L = ShootingLayout::of(run.guess.structure);
  const int b = L.n + 1;
  for (int k = 0; k < L.nodes; ++k)
    run.initial_matching_residual =
        std::max(run.initial_matching_residual, r0.segment(2 * k * b, b).lpNorm<Eigen::Infinity>());
  run.initial_matching_residual =
      std::max(run.initial_matching_residual, r0.segment(2 * L.nodes * b, L.n).lpNorm<Eigen::Infinity>());
  {
    std::ostringstream msg;
    msg << "mission: Z of size " << run.guess.z.size() << ", assembled residual " << run.initial_residual;
    say(log, msg.str());
  }

  MissionOptions mo;
  mo.newton.max_iter = sc.max_iterations;
  mo.residual_tol = sc.residual_tol;

  auto t0 = Clock::now();
  run.start = solve_mission(p, run.guess.z, run.guess.structure, sc.thrust_start, mo);
  run.start.departure_phase = dep;
  run.start.arrival_phase = arr;
  run.seconds_solve = seconds_since(t0);
  {
    std::ostringstream msg;
    msg << "mission: solved at " << sc.thrust_start << " N in " << run.start.iterations << " iterations";
    say(log, msg.str());
  }

  t0 = Clock::now();
  if (sc.thrust_target == sc.thrust_start) {
    run.fixed = run.start;
    run.continuation.thrusts = {sc.thrust_start};
  } else {
    run.fixed = thrust_continuation(p, run.start, sc.thrust_target, ContinuationSchedule::uniform(sc.thrust_steps),
                                    mo, &run.continuation);
  }
  run.seconds_continuation = seconds_since(t0);
  run.fixed_transversality = transversality_residual(p, run.fixed);
  run.turnpike_fixed = turnpike_check(mission_samples(p, run.fixed), run.fixed.structure.total_time());
  {
    std::ostringstream msg;
    msg << "mission: " << sc.thrust_target << " N reached in " << run.continuation.steps << " steps, cost1 "
        << run.fixed.costs.cost1;
    say(log, msg.str());
  }

  t0 = Clock::now();
  if (sc.optimize_terminal) {
    TerminalOptions to;
    to.tol = sc.terminal_tol;
    to.max_rounds = sc.terminal_max_rounds;
    to.mission = mo;
    run.optimized = optimize_terminal_points(p, run.fixed, orbits.departure, orbits.arrival, to, &run.terminal);
  } else {
    run.optimized = run.fixed;
    run.terminal.initial_residual = run.terminal.final_residual = run.fixed_transversality;
    run.terminal.initial_cost1 = run.fixed.costs.cost1;
  }
  run.seconds_terminal = seconds_since(t0);
  run.turnpike = turnpike_check(mission_samples(p, run.optimized), run.optimized.structure.total_time());
  {
    std::ostringstream msg;
    msg << "mission: terminal points after " << run.terminal.probes << " re-solves, |r| = "
        << run.terminal.final_residual.lpNorm<Eigen::Infinity>() << ", cost1 " << run.optimized.costs.cost1;
    say(log, msg.str());
  }
  return run;
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::lagrange: return "lagrange";
    case Stage::orbit: return "orbit";
    case Stage::family: return "family";
    case Stage::manifold: return "manifold";
    case Stage::heteroclinic: return "heteroclinic";
    case Stage::transfer: return "transfer";
    case Stage::mission: return "mission";
  }
  return "";
}

Stage parse_stage(const std::string& s) {
  for (auto st : {Stage::lagrange, Stage::orbit, Stage::family, Stage::manifold, Stage::heteroclinic,
                  Stage::transfer, Stage::mission})
    if (s == stage_name(st)) return st;
  throw ScenarioError("unknown stage '" + s +
                      "' (expected lagrange, orbit, family, manifold, heteroclinic, transfer or mission)");
}

namespace {

namespace fs = std::filesystem;

struct StageContext {
  const Scenario& sc;
  fs::path out;
  std::ostream* log;
  std::vector<fs::path> artifacts;
  Json settings = Json::object();

  Json summary(Stage st) const {
    Json d = make_document(stage_name(st));
    d["scenario"] = sc.name;
    d["mission_kind"] = mission_kind_name(sc.kind);
    return d;
  }
  void write(const std::string& file, const Json& doc) {
    write_json(out / file, doc);
    artifacts.push_back(out / file);
  }
  void write_rows(const std::string& file, const std::vector<CsvRow>& rows) {
    write_csv(out / file, rows);
    artifacts.push_back(out / file);
  }
  Json require(Stage st) const {
    const fs::path f = out / (stage_name(st) + ".json");
    if (!fs::exists(f))
      throw MissingArtifact("missing " + f.string() + "; run --stage " + stage_name(st) + " first", st);
    return read_json(f, stage_name(st));
  }
};

OrbitPair orbits_from(const Json& d) {
  return {orbit_from_json(d.at("departure")), orbit_from_json(d.at("arrival"))};
}

void stage_lagrange(StageContext& cx) {
  const auto& p = cx.sc.system;
  Json d = cx.summary(Stage::lagrange);
  d["mu"] = tagged(p.mu, unit::normalized);
  Json pts = Json::array();
  const auto L = lagrange_points(p.mu);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd s = lift(L[i]);
    Json j;
    j["index"] = tagged(i + 1, unit::count);
    j["state"] = tagged(s, unit::normalized);
    j["energy"] = tagged(energy(p, s), unit::normalized);
    j["field_residual"] = tagged(vector_field(p, s).lpNorm<Eigen::Infinity>(), unit::normalized);
    pts.push_back(std::move(j));
  }
  d["points"] = std::move(pts);
  cx.write("lagrange.json", d);
}

void stage_orbit(StageContext& cx) {
  const auto& p = cx.sc.system;
  const OrbitPair o = seed_orbits(cx.sc);
  Json d = cx.summary(Stage::orbit);
  d["departure"] = orbit_to_json(p, o.departure);
  d["arrival"] = orbit_to_json(p, o.arrival);
  cx.write("orbit.json", d);
  cx.write_rows("orbit_L1.csv", orbit_rows(p, o.departure));
  cx.write_rows("orbit_L2.csv", orbit_rows(p, o.arrival));
  cx.settings["correction_tol"] = tagged(OrbitSolveOptions{}.newton.tol, unit::normalized);
}

void stage_family(StageContext& cx) {
  const auto& p = cx.sc.system;
  const OrbitPair seeds = orbits_from(cx.require(Stage::orbit));
  FamilyReport r1, r2;
  const OrbitPair o = mission_orbits(cx.sc, seeds, &r1, &r2);
  Json d = cx.summary(Stage::family);
  d["departure"] = orbit_to_json(p, o.departure);
  d["arrival"] = orbit_to_json(p, o.arrival);
  d["departure"]["continuation_steps"] = tagged(r1.continuation_steps, unit::count);
  d["arrival"]["continuation_steps"] = tagged(r2.continuation_steps, unit::count);
  d["energy_gap"] = tagged(o.arrival.energy - o.departure.energy, unit::normalized);
  cx.write("family.json", d);
  cx.write_rows("family_L1.csv", orbit_rows(p, o.departure));
  cx.write_rows("family_L2.csv", orbit_rows(p, o.arrival));
  cx.settings["family_steps"] = tagged(cx.sc.family_steps, unit::count);
}

void stage_manifold(StageContext& cx) {
  const auto& p = cx.sc.system;
  const OrbitPair o = orbits_from(cx.require(Stage::family));
  FiberOptions fo;
  fo.horizon = cx.sc.horizon;
  fo.section = cx.sc.section;
  fo.keep_trajectory = false;
  Json d = cx.summary(Stage::manifold);
  d["alpha"] = tagged(cx.sc.alpha, unit::normalized);
  d["fibers"] = tagged(cx.sc.fibers, unit::count);
  auto one = [&](const char* name, const PeriodicOrbit& orbit, Stability st, Branch br, int k) {
    fo.stop_after = k;
    const auto fibers = globalize(p, orbit, cx.sc.fibers, st, br, cx.sc.alpha, fo);
    const auto cut = section_cut(fibers, cx.sc.section, k);
    int failed = 0;
    for (const auto& f : fibers) failed += f.failed ? 1 : 0;
    Json j;
    j["crossing"] = tagged(k, unit::count);
    j["failed_fibers"] = tagged(failed, unit::count);
    j["cut_points"] = tagged(static_cast<int>(cut.size()), unit::count);
    d[name] = std::move(j);
    std::vector<CsvRow> rows;
    for (const auto& c : cut) {
      CsvRow r;
      r.t = c.t;
      r.state = c.state;
      rows.push_back(std::move(r));
    }
    cx.write_rows(std::string("manifold_") + name + ".csv", rows);
  };
  one("unstable", o.departure, Stability::unstable, Branch::plus, cx.sc.crossing_unstable);
  one("stable", o.arrival, Stability::stable, Branch::minus, cx.sc.crossing_stable);
  cx.write("manifold.json", d);
  cx.settings["horizon"] = tagged(cx.sc.horizon, unit::normalized);
}

void stage_heteroclinic(StageContext& cx) {
  const auto& p = cx.sc.system;
  const OrbitPair o = orbits_from(cx.require(Stage::family));
  const Connection c = connect_orbits(cx.sc, o);
  Json d = cx.summary(Stage::heteroclinic);
  d["connection"] = connection_to_json(p, c);
  cx.write("heteroclinic.json", d);
  if (!c.bridged) {
    cx.write_rows("heteroclinic.csv", trajectory_rows(c.pieces.front()));
  } else {
    cx.write_rows("bridge_unstable.csv", trajectory_rows(c.pieces[0]));
    cx.write_rows("bridge_stable.csv", trajectory_rows(c.pieces[1]));
  }
  cx.settings["fibers"] = tagged(cx.sc.fibers, unit::count);
}

void stage_transfer(StageContext& cx) {
  const OrbitPair o = orbits_from(cx.require(Stage::family));
  const Connection c = connection_from_json(cx.require(Stage::heteroclinic).at("connection"));
  const auto legs = solve_local_legs(cx.sc, o, c);
  Json d = cx.summary(Stage::transfer);
  Json arr = Json::array();
  double fuel = 0.0;
  for (const auto& leg : legs) {
    arr.push_back(leg_to_json(leg, cx.sc.thrust_start));
    fuel += leg.costs.fuel;
  }
  d["legs"] = std::move(arr);
  d["fuel"] = tagged(fuel, unit::kg);
  cx.write("transfer.json", d);
  cx.settings["transfer_steps"] = tagged(cx.sc.transfer_steps, unit::count);
}

void stage_mission(StageContext& cx) {
  const auto& p = cx.sc.system;
  const OrbitPair o = orbits_from(cx.require(Stage::family));
  const Connection c = connection_from_json(cx.require(Stage::heteroclinic).at("connection"));
  const Json transfers = cx.require(Stage::transfer);
  std::vector<LocalLeg> legs;
  for (const auto& j : transfers.at("legs")) legs.push_back(leg_from_json(j));
  const MissionRun run = run_mission(cx.sc, o, c, legs, cx.log);

  Json d = cx.summary(Stage::mission);
  d["z_size"] = tagged(run.guess.z.size(), unit::count);
  d["assembled_residual"] = tagged(run.initial_residual, unit::normalized);
  d["assembled_matching_residual"] = tagged(run.initial_matching_residual, unit::normalized);
  d["total_time"] = tagged(run.optimized.structure.total_time(), unit::normalized);
  d["start_thrust"] = mission_to_json(p, run.start);
  Json cont;
  cont["steps"] = tagged(run.continuation.steps, unit::count);
  cont["refinements"] = tagged(run.continuation.refinements, unit::count);
  cont["newton_iterations"] = tagged(run.continuation.newton_iterations, unit::count);
  d["thrust_continuation"] = std::move(cont);
  d["fixed_endpoints"] = mission_to_json(p, run.fixed);
  d["fixed_endpoints"]["transversality"] = tagged(Eigen::VectorXd(run.fixed_transversality), unit::normalized);
  d["fixed_endpoints"]["turnpike_ratio"] = tagged(run.turnpike_fixed.ratio, unit::ratio);
  Json term;
  term["enabled"] = cx.sc.optimize_terminal;
  term["initial_transversality"] = tagged(Eigen::VectorXd(run.terminal.initial_residual), unit::normalized);
  term["final_transversality"] = tagged(Eigen::VectorXd(run.terminal.final_residual), unit::normalized);
  term["probes"] = tagged(run.terminal.probes, unit::count);
  term["rounds"] = tagged(run.terminal.rounds, unit::count);
  term["converged"] = run.terminal.converged;
  term["cost_monotone"] = run.terminal.cost_monotone;
  term["notes"] = run.terminal.notes;
  d["terminal_optimization"] = std::move(term);
  d["optimized"] = mission_to_json(p, run.optimized);
  Json tp;
  tp["max_control"] = tagged(run.turnpike.max_control, unit::ratio);
  tp["middle_max_control"] = tagged(run.turnpike.middle_max_control, unit::ratio);
  tp["ratio"] = tagged(run.turnpike.ratio, unit::ratio);
  tp["passed"] = run.turnpike.passed;
  d["turnpike"] = std::move(tp);
  Json sum;
  sum["fuel"] = tagged(run.optimized.costs.fuel, unit::kg);
  sum["final_mass"] = tagged(run.optimized.final_mass(), unit::kg);
  sum["cost1"] = tagged(run.optimized.costs.cost1, unit::normalized);
  sum["cost2"] = tagged(run.optimized.costs.cost2, unit::normalized);
  sum["cost3"] = tagged(run.optimized.costs.cost3, unit::cost3);
  sum["total_time"] = tagged(run.optimized.structure.total_time(), unit::normalized);
  d["summary"] = std::move(sum);
  cx.write("mission.json", d);
  cx.write_rows("mission.csv", mission_rows(mission_samples(p, run.optimized)));
  cx.settings["residual_tol"] = tagged(cx.sc.residual_tol, unit::normalized);
  cx.settings["thrust_steps"] = tagged(cx.sc.thrust_steps, unit::count);
  cx.settings["terminal_tol"] = tagged(cx.sc.terminal_tol, unit::normalized);
  cx.settings["seconds_solve"] = tagged(run.seconds_solve, unit::second);
  cx.settings["seconds_continuation"] = tagged(run.seconds_continuation, unit::second);
  cx.settings["seconds_terminal"] = tagged(run.seconds_terminal, unit::second);
}

}  // namespace

StageOutcome run_stage(const Scenario& sc, Stage stage, const std::filesystem::path& out, std::ostream* log) {
  std::filesystem::create_directories(out);
  StageOutcome outcome;
  if (stage == Stage::mission) {
    for (auto st : {Stage::lagrange, Stage::orbit, Stage::family, Stage::manifold, Stage::heteroclinic,
                    Stage::transfer}) {
      auto o = run_stage(sc, st, out, log);
      outcome.artifacts.insert(outcome.artifacts.end(), o.artifacts.begin(), o.artifacts.end());
    }
  }
  say(log, "stage " + stage_name(stage) + " ...");
  const auto t0 = Clock::now();
  StageContext cx{sc, out, log, {}};
  try {
    switch (stage) {
      case Stage::lagrange: stage_lagrange(cx); break;
      case Stage::orbit: stage_orbit(cx); break;
      case Stage::family: stage_family(cx); break;
      case Stage::manifold: stage_manifold(cx); break;
      case Stage::heteroclinic: stage_heteroclinic(cx); break;
      case Stage::transfer: stage_transfer(cx); break;
      case Stage::mission: stage_mission(cx); break;
    }
  } catch (const MissingArtifact&) {
    throw;
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(e.what(), stage);
  }
  const double secs = seconds_since(t0);
  Json meta = make_document("run_" + stage_name(stage));
  meta["scenario"] = sc.name;
  meta["wall_time"] = tagged(secs, unit::second);
  meta["settings"] = cx.settings;
  cx.write("run_" + stage_name(stage) + ".json", meta);
  outcome.artifacts.insert(outcome.artifacts.end(), cx.artifacts.begin(), cx.artifacts.end());
  outcome.seconds = secs;
  {
    std::ostringstream msg;
    msg << "stage " + stage_name(stage) + " done in " << secs << " s";
    say(log, msg.str());
  }
  return outcome;
}

}  // namespace lowthrust
