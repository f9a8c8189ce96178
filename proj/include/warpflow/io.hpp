#pragma once

// CSV and JSON artifacts. Machine files carry full precision and a
// schema_version; CSV files start with a `# schema_version: N` line.

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "warpflow/diagnostics.hpp"
#include "warpflow/geodesics.hpp"
#include "warpflow/linearization.hpp"
#include "warpflow/surfaces.hpp"

namespace warpflow {

inline constexpr int kSchemaVersion = 1;

// %.17g
std::string format_machine(double v);
// %.6g
std::string format_table(double v);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_average_csv(std::ostream& os, const AverageSeries& s);
void write_envelope_csv(std::ostream& os, const EnvelopeCheck& e);
// One row per base point; t is the orbit time of that base point.
void write_bundles_csv(std::ostream& os, std::span<const double> t,
                       std::span<const BundleEstimate<1>> bundles);
// Generic two-column table.
void write_series_csv(std::ostream& os, const std::string& header,
                      std::span<const std::pair<double, double>> rows);

// Rows of a numeric CSV, skipping `#` lines and the header.
std::vector<std::vector<double>> read_csv(std::istream& is);

void to_json(nlohmann::json& j, const Interval& v);
void from_json(const nlohmann::json& j, Interval& v);
void to_json(nlohmann::json& j, const ConditionReport& v);
void from_json(const nlohmann::json& j, ConditionReport& v);
void to_json(nlohmann::json& j, const Floor& v);
void from_json(const nlohmann::json& j, Floor& v);
void to_json(nlohmann::json& j, const GeodesicSummary& v);
void from_json(const nlohmann::json& j, GeodesicSummary& v);
void to_json(nlohmann::json& j, const ScanReport& v);
void from_json(const nlohmann::json& j, ScanReport& v);
void to_json(nlohmann::json& j, const GeodesicState& v);
void from_json(const nlohmann::json& j, GeodesicState& v);
void to_json(nlohmann::json& j, const BundleEstimate<1>& v);
void from_json(const nlohmann::json& j, BundleEstimate<1>& v);
void to_json(nlohmann::json& j, const ContractionFit& v);
void from_json(const nlohmann::json& j, ContractionFit& v);
void to_json(nlohmann::json& j, const HyperbolicityStats& v);
void from_json(const nlohmann::json& j, HyperbolicityStats& v);

// Adds schema_version and writes with indentation.
void write_json(std::ostream& os, nlohmann::json j);
// Parses and checks schema_version.
nlohmann::json read_json(std::istream& is);

}  // namespace warpflow
