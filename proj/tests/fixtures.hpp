#pragma once

// Orbits shared by several test suites, computed once per process.

#include <map>
#include <utility>

#include "lowthrust/connections.hpp"
#include "lowthrust/orbits.hpp"
#include "lowthrust/pipeline.hpp"

namespace lowthrust::testing {

inline const SystemParams& params() {
  static const SystemParams p = SystemParams::earth_moon();
  return p;
}

// Planar Lyapunov orbit about L1 or L2 at the given energy.
inline const PeriodicOrbit& lyapunov_at(int center, double e) {
  static std::map<std::pair<int, double>, PeriodicOrbit> cache;
  auto key = std::make_pair(center, e);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const auto& p = params();
  auto seed = correct_orbit(p, richardson_guess(p, center, 0.005, Dimension::planar));
  return cache.emplace(key, continue_family_energy(p, seed, e, ContinuationSchedule::uniform(30))).first->second;
}

// Halo orbit with the given z0 (normalized), corrected with z0 held fixed.
inline const PeriodicOrbit& halo_with_z(int center, double z_km) {
  static std::map<std::pair<int, double>, PeriodicOrbit> cache;
  auto key = std::make_pair(center, z_km);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const auto& p = params();
  auto g = richardson_guess(p, center, z_km * 1e3 / p.l_star, Dimension::spatial);
  return cache.emplace(key, correct_orbit(p, g, FixedCoordinate::z0)).first->second;
}

// Heteroclinic between the L1 and L2 Lyapunov orbits at E = -1.5890 through
// the second crossings of U2.
inline HeteroclinicOptions two_revolution_options() {
  HeteroclinicOptions opt;
  opt.crossing_unstable = 2;
  opt.crossing_stable = 2;
  opt.horizon = 20.0;
  return opt;
}

inline const HeteroclinicOrbit& two_revolution_connection() {
  static const HeteroclinicOrbit h =
      find_heteroclinic(params(), lyapunov_at(1, -1.5890), lyapunov_at(2, -1.5890), two_revolution_options());
  return h;
}

// Mission 2 settings: the two-revolution heteroclinic with 5 nodes inserted
// along the free arc, 60 N -> 0.3 N.
inline Scenario two_revolution_scenario() {
  Scenario sc;
  sc.name = "two-revolution";
  sc.kind = MissionKind::lyapunov_2rev;
  sc.energy = -1.5890;
  sc.crossing_unstable = 2;
  sc.crossing_stable = 2;
  sc.extra_nodes = 5;
  return sc;
}

struct MissionFixture {
  Scenario scenario;
  OrbitPair orbits;
  Connection connection;
  std::vector<LocalLeg> legs;
  MissionRun run;
};

inline const MissionFixture& two_revolution_mission() {
  static const MissionFixture f = [] {
    MissionFixture m;
    m.scenario = two_revolution_scenario();
    m.orbits = {lyapunov_at(1, -1.5890), lyapunov_at(2, -1.5890)};
    m.connection = connect_orbits(m.scenario, m.orbits);
    m.legs = solve_local_legs(m.scenario, m.orbits, m.connection);
    m.run = run_mission(m.scenario, m.orbits, m.connection, m.legs);
    return m;
  }();
  return f;
}

}  // namespace lowthrust::testing
