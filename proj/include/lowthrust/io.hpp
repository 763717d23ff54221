#pragma once

// Artifact formats. JSON documents carry a format version, and every number
// is written as {"value": ..., "unit": ...}. Trajectory CSV files use the
// fixed columns
//
//   t,x,y,z,vx,vy,vz,m,ux,uy,uz,u_norm,H
//
// in normalized units except m (kg). Planar rows leave z, vz and uz empty;
// uncontrolled rows leave m, the control and H empty.

#include <Eigen/Core>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lowthrust/mshoot.hpp"
#include "lowthrust/orbits.hpp"
#include "lowthrust/pipeline.hpp"

namespace lowthrust {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

namespace unit {
inline constexpr const char* normalized = "normalized";
inline constexpr const char* kg = "kg";
inline constexpr const char* newton = "N";
inline constexpr const char* second = "s";
inline constexpr const char* km = "km";
inline constexpr const char* count = "count";
inline constexpr const char* ratio = "dimensionless";
inline constexpr const char* cost3 = "N^2 kg^-2 s";
}  // namespace unit

Json tagged(double value, const char* unit);
Json tagged(const Eigen::VectorXd& value, const char* unit);
// Throws Error when the field is missing or not a tagged number.
double untag(const Json& j, const std::string& key);
Eigen::VectorXd untag_vector(const Json& j, const std::string& key);

// Document with "format_version" and "artifact" heads.
Json make_document(const std::string& artifact);
// Pretty-printed with a trailing newline; throws Error on I/O failure.
void write_json(const std::filesystem::path& path, const Json& doc);
// Throws Error on I/O, parse or version mismatch.
Json read_json(const std::filesystem::path& path, const std::string& artifact);

Json orbit_to_json(const SystemParams& p, const PeriodicOrbit& orbit);
PeriodicOrbit orbit_from_json(const Json& j);

Json connection_to_json(const SystemParams& p, const Connection& c);
Connection connection_from_json(const Json& j);

Json leg_to_json(const LocalLeg& leg, double thrust_newtons);
LocalLeg leg_from_json(const Json& j);

Json costs_to_json(const MissionCosts& c);
Json mission_to_json(const SystemParams& p, const MissionSolution& s);

struct CsvRow {
  double t = 0.0;
  Eigen::VectorXd state;           // 4 or 6
  std::optional<double> mass;      // kg
  std::optional<Eigen::VectorXd> control;  // 2 or 3
  std::optional<double> hamiltonian;
};

std::string csv_header();
std::string csv_line(const CsvRow& row);
void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);

// Uncontrolled rows: n_samples + 1 points of one orbit period.
std::vector<CsvRow> orbit_rows(const SystemParams& p, const PeriodicOrbit& orbit, int n_samples = 400);
std::vector<CsvRow> trajectory_rows(const Trajectory<Eigen::Dynamic>& traj, int n_samples = 1000);
std::vector<CsvRow> mission_rows(const std::vector<MissionSample>& samples);

}  // namespace lowthrust
