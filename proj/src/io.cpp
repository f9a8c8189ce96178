#include "warpflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "warpflow/errors.hpp"

namespace warpflow {

using nlohmann::json;

namespace {

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// JSON has no infinities; they travel as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double get_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InvalidArgument("expected a number, got " + j.dump());
}

json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_num(j.at(key));
}

json pairs(const std::vector<std::pair<double, double>>& v) {
  json a = json::array();
  for (const auto& [t, f] : v) a.push_back(json::array({num(t), num(f)}));
  return a;
}

std::vector<std::pair<double, double>> get_pairs(const json& j) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : j) out.emplace_back(get_num(p.at(0)), get_num(p.at(1)));
  return out;
}

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_numbers(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(get_num(x));
  return out;
}

void header(std::ostream& os, const std::string& columns) {
  os << "# schema_version: " << kSchemaVersion << '\n' << columns << '\n';
}

}  // namespace

std::string format_machine(double v) { return format("%.17g", v); }
std::string format_table(double v) { return format("%.6g", v); }

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  header(os, "t,x,y,vx,vy,K,clairaut");
  const auto& ts = traj.times();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& s = traj.states()[i];
    os << format_machine(ts[i]) << ',' << format_machine(s.x) << ',' << format_machine(s.y)
       << ',' << format_machine(s.vx) << ',' << format_machine(s.vy) << ','
       << format_machine(traj.curvature_samples()[i]) << ','
       << format_machine(traj.clairaut()[i]) << '\n';
  }
}

void write_average_csv(std::ostream& os, const AverageSeries& s) {
  header(os, "t,avg");
  for (std::size_t i = 0; i < s.t_grid.size(); ++i) {
    os << format_machine(s.t_grid[i]) << ',' << format_machine(s.avg[i]) << '\n';
  }
}

void write_envelope_csv(std::ostream& os, const EnvelopeCheck& e) {
  header(os, "t,b,lower,upper,gain");
  for (const auto& s : e.samples) {
    os << format_machine(s.t) << ',' << format_machine(s.b) << ',' << format_machine(s.lower)
       << ',' << format_machine(s.upper) << ',' << format_machine(s.gain) << '\n';
  }
}

void write_bundles_csv(std::ostream& os, std::span<const double> t,
                       std::span<const BundleEstimate<1>> bundles) {
  if (t.size() != bundles.size()) throw InvalidArgument("one time per bundle estimate");
  header(os, "t,x,y,u_s,u_u,residual_s,residual_u");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& b = bundles[i];
    const GeodesicState th = b.theta.value_or(GeodesicState{});
    os << format_machine(t[i]) << ',' << format_machine(th.x) << ',' << format_machine(th.y)
       << ',' << format_machine(b.u_s(0, 0)) << ',' << format_machine(b.u_u(0, 0)) << ','
       << format_machine(b.residual_s) << ',' << format_machine(b.residual_u) << '\n';
  }
}

void write_series_csv(std::ostream& os, const std::string& columns,
                      std::span<const std::pair<double, double>> rows) {
  header(os, columns);
  for (const auto& [a, b] : rows) os << format_machine(a) << ',' << format_machine(b) << '\n';
}

std::vector<std::vector<double>> read_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool seen_header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

void to_json(json& j, const Interval& v) { j = json{{"lo", num(v.lo)}, {"hi", num(v.hi)}}; }
void from_json(const json& j, Interval& v) {
  v.lo = get_num(j.at("lo"));
  v.hi = get_num(j.at("hi"));
}

void to_json(json& j, const ConditionReport& v) {
  j = json{{"condA_ok", v.condA_ok},
           {"condB_ok", v.condB_ok},
           {"condB_checkable", v.condB_checkable},
           {"condC_ok", v.condC_ok},
           {"measured_C1", num(v.measured_C1)},
           {"measured_C2", num(v.measured_C2)},
           {"eta", opt(v.eta)},
           {"grid_resolution", num(v.grid_resolution)},
           {"window", v.window}};
}
void from_json(const json& j, ConditionReport& v) {
  v.condA_ok = j.at("condA_ok").get<bool>();
  v.condB_ok = j.at("condB_ok").get<bool>();
  v.condB_checkable = j.at("condB_checkable").get<bool>();
  v.condC_ok = j.at("condC_ok").get<bool>();
  v.measured_C1 = get_num(j.at("measured_C1"));
  v.measured_C2 = get_num(j.at("measured_C2"));
  v.eta = get_opt(j, "eta");
  v.grid_resolution = get_num(j.at("grid_resolution"));
  v.window = j.at("window").get<Interval>();
}

void to_json(json& j, const Floor& v) {
  j = json{{"floor", num(v.floor)}, {"t_star", num(v.t_star)}, {"eta", num(v.eta)},
           {"period", num(v.period)}, {"c1", num(v.c1)},         {"A", num(v.A)}};
}
void from_json(const json& j, Floor& v) {
  v.floor = get_num(j.at("floor"));
  v.t_star = get_num(j.at("t_star"));
  v.eta = get_num(j.at("eta"));
  v.period = get_num(j.at("period"));
  v.c1 = get_num(j.at("c1"));
  v.A = get_num(j.at("A"));
}

void to_json(json& j, const GeodesicSummary& v) {
  j = json{{"index", v.index},
           {"x0", num(v.x0)},
           {"b0", num(v.b0)},
           {"sign", v.sign},
           {"ok", v.ok},
           {"error", v.error},
           {"final_avg", num(v.final_avg)},
           {"max_avg_after_half", num(v.max_avg_after_half)}};
}
void from_json(const json& j, GeodesicSummary& v) {
  v.index = j.at("index").get<int>();
  v.x0 = get_num(j.at("x0"));
  v.b0 = get_num(j.at("b0"));
  v.sign = j.at("sign").get<int>();
  v.ok = j.at("ok").get<bool>();
  v.error = j.at("error").get<std::string>();
  v.final_avg = get_num(j.at("final_avg"));
  v.max_avg_after_half = get_num(j.at("max_avg_after_half"));
}

void to_json(json& j, const ScanReport& v) {
  j = json{{"schema_version", v.schema_version},
           {"model_label", v.model_label},
           {"config",
            {{"n_geodesics", v.n_geodesics},
             {"seed", v.seed},
             {"t_final", num(v.t_final)},
             {"t_step", num(v.t_step)},
             {"min_B", num(v.min_B)},
             {"window", v.window}}},
           {"t_star", opt(v.t_star)},
           {"sup_avg_at", pairs(v.sup_avg_at)},
           {"B_estimate", num(v.B_estimate)},
           {"t0_estimate", opt(v.t0_estimate)},
           {"verdict", to_string(v.verdict)},
           {"geodesics", v.geodesics},
           {"floor", v.floor ? json(*v.floor) : json(nullptr)}};
}
void from_json(const json& j, ScanReport& v) {
  v.schema_version = j.at("schema_version").get<int>();
  v.model_label = j.at("model_label").get<std::string>();
  const json& c = j.at("config");
  v.n_geodesics = c.at("n_geodesics").get<int>();
  v.seed = c.at("seed").get<std::uint64_t>();
  v.t_final = get_num(c.at("t_final"));
  v.t_step = get_num(c.at("t_step"));
  v.min_B = get_num(c.at("min_B"));
  v.window = c.at("window").get<Interval>();
  v.t_star = get_opt(j, "t_star");
  v.sup_avg_at = get_pairs(j.at("sup_avg_at"));
  v.B_estimate = get_num(j.at("B_estimate"));
  v.t0_estimate = get_opt(j, "t0_estimate");
  v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  v.geodesics = j.at("geodesics").get<std::vector<GeodesicSummary>>();
  v.floor.reset();
  if (!j.at("floor").is_null()) v.floor = j.at("floor").get<Floor>();
}

void to_json(json& j, const GeodesicState& v) {
  j = json{{"x", num(v.x)}, {"y", num(v.y)}, {"vx", num(v.vx)}, {"vy", num(v.vy)}};
}
void from_json(const json& j, GeodesicState& v) {
  v.x = get_num(j.at("x"));
  v.y = get_num(j.at("y"));
  v.vx = get_num(j.at("vx"));
  v.vy = get_num(j.at("vy"));
}

void to_json(json& j, const BundleEstimate<1>& v) {
  j = json{{"u_s", num(v.u_s(0, 0))},
           {"u_u", num(v.u_u(0, 0))},
           {"r_used", num(v.r_used)},
           {"residual", num(v.residual)},
           {"residual_s", num(v.residual_s)},
           {"residual_u", num(v.residual_u)},
           {"history_s", numbers(v.history_s)},
           {"history_u", numbers(v.history_u)},
           {"converged", v.converged},
           {"truncated", v.truncated},
           {"theta", v.theta ? json(*v.theta) : json(nullptr)}};
}
void from_json(const json& j, BundleEstimate<1>& v) {
  v.u_s = Square<1>::Constant(get_num(j.at("u_s")));
  v.u_u = Square<1>::Constant(get_num(j.at("u_u")));
  v.r_used = get_num(j.at("r_used"));
  v.residual = get_num(j.at("residual"));
  v.residual_s = get_num(j.at("residual_s"));
  v.residual_u = get_num(j.at("residual_u"));
  v.history_s = get_numbers(j.at("history_s"));
  v.history_u = get_numbers(j.at("history_u"));
  v.converged = j.at("converged").get<bool>();
  v.truncated = j.at("truncated").get<bool>();
  v.theta.reset();
  if (!j.at("theta").is_null()) v.theta = j.at("theta").get<GeodesicState>();
}

void to_json(json& j, const ContractionFit& v) {
  j = json{{"C", num(v.C)}, {"lambda", num(v.lambda)}, {"r", num(v.r)},
           {"b", num(v.b)}, {"F", num(v.F)},           {"envelope_holds", v.envelope_holds}};
}
void from_json(const json& j, ContractionFit& v) {
  v.C = get_num(j.at("C"));
  v.lambda = get_num(j.at("lambda"));
  v.r = get_num(j.at("r"));
  v.b = get_num(j.at("b"));
  v.F = get_num(j.at("F"));
  v.envelope_holds = j.at("envelope_holds").get<bool>();
}

void to_json(json& j, const HyperbolicityStats& v) {
  j = json{{"min_angle_delta", num(v.min_angle_delta)},
           {"D_check", v.D_check},
           {"stable", v.stable ? json(*v.stable) : json(nullptr)},
           {"unstable", v.unstable ? json(*v.unstable) : json(nullptr)},
           {"stable_samples", pairs(v.stable_samples)},
           {"unstable_samples", pairs(v.unstable_samples)},
           {"bundles", v.bundles}};
}
void from_json(const json& j, HyperbolicityStats& v) {
  v.min_angle_delta = get_num(j.at("min_angle_delta"));
  v.D_check = j.at("D_check").get<bool>();
  v.stable.reset();
  v.unstable.reset();
  if (!j.at("stable").is_null()) v.stable = j.at("stable").get<ContractionFit>();
  if (!j.at("unstable").is_null()) v.unstable = j.at("unstable").get<ContractionFit>();
  v.stable_samples = get_pairs(j.at("stable_samples"));
  v.unstable_samples = get_pairs(j.at("unstable_samples"));
  v.bundles = j.at("bundles").get<std::vector<BundleEstimate<1>>>();
}

void write_json(std::ostream& os, json j) {
  if (j.is_object() && !j.contains("schema_version")) j["schema_version"] = kSchemaVersion;
  os << j.dump(2) << '\n';
}

json read_json(std::istream& is) {
  json j = json::parse(is);
  if (!j.is_object() || !j.contains("schema_version")) {
    throw InvalidArgument("artifact has no schema_version");
  }
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw InvalidArgument("unsupported schema_version " + j.at("schema_version").dump());
  }
  return j;
}

}  // namespace warpflow
