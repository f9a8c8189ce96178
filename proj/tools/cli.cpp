#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "svg_plot.hpp"
#include "warpflow/diagnostics.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/geodesics.hpp"
#include "warpflow/io.hpp"
#include "warpflow/linearization.hpp"
#include "warpflow/surfaces.hpp"

namespace warpflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::string model_spec;
  std::optional<double> t_final;
  std::optional<int> n;
  std::uint64_t seed = 7;
  double t_step = 1.0;
  double min_B = 1e-3;
  int workers = 1;
  std::string out_dir;
  std::string config_path;
  bool plots = false;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double max_step = 0.25;
  std::optional<double> x0;
  double b0 = 0.5;
  int sign = 1;
  double dt = 0.5;
};

// JSON config key -> flag name.
const std::vector<std::pair<std::string, std::string>> kConfigKeys = {
    {"model", "--model"},     {"t_final", "--t-final"}, {"n", "--n"},
    {"seed", "--seed"},       {"t_step", "--t-step"},   {"min_b", "--min-b"},
    {"workers", "--workers"}, {"out", "--out"},         {"plots", "--plots"},
    {"abs_tol", "--abs-tol"}, {"rel_tol", "--rel-tol"}, {"max_step", "--max-step"},
    {"x0", "--x0"},           {"b0", "--b0"},           {"sign", "--sign"},
    {"dt", "--dt"}};

void apply_config(RunConfig& rc, const CLI::App& sub) {
  std::ifstream in(rc.config_path);
  if (!in) throw InvalidArgument("cannot read config file " + rc.config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + rc.config_path + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") continue;
    const auto it = std::find_if(kConfigKeys.begin(), kConfigKeys.end(),
                                 [&](const auto& p) { return p.first == key; });
    if (it == kConfigKeys.end()) throw InvalidArgument("config: unknown field '" + key + "'");
    if (sub.count(it->second) > 0) continue;  // flags win
    try {
      if (key == "model") rc.model_spec = value.get<std::string>();
      else if (key == "t_final") rc.t_final = value.get<double>();
      else if (key == "n") rc.n = value.get<int>();
      else if (key == "seed") rc.seed = value.get<std::uint64_t>();
      else if (key == "t_step") rc.t_step = value.get<double>();
      else if (key == "min_b") rc.min_B = value.get<double>();
      else if (key == "workers") rc.workers = value.get<int>();
      else if (key == "out") rc.out_dir = value.get<std::string>();
      else if (key == "plots") rc.plots = value.get<bool>();
      else if (key == "abs_tol") rc.abs_tol = value.get<double>();
      else if (key == "rel_tol") rc.rel_tol = value.get<double>();
      else if (key == "max_step") rc.max_step = value.get<double>();
      else if (key == "x0") rc.x0 = value.get<double>();
      else if (key == "b0") rc.b0 = value.get<double>();
      else if (key == "sign") rc.sign = value.get<int>();
      else if (key == "dt") rc.dt = value.get<double>();
    } catch (const json::exception&) {
      throw InvalidArgument("config: field '" + key + "' has the wrong type");
    }
  }
}

void check_config(const RunConfig& rc) {
  if (rc.command != "report" && rc.model_spec.empty()) {
    throw InvalidArgument("--model is required");
  }
  if (rc.t_final && !(*rc.t_final > 0)) throw InvalidArgument("--t-final must be positive");
  if (rc.n && *rc.n < 1) throw InvalidArgument("--n must be at least 1");
  if (!(rc.t_step > 0)) throw InvalidArgument("--t-step must be positive");
  if (!(rc.min_B >= 0)) throw InvalidArgument("--min-b must be non-negative");
  if (rc.workers < 1) throw InvalidArgument("--workers must be at least 1");
  if (!(rc.abs_tol > 0) || !(rc.rel_tol > 0) || !(rc.max_step > 0)) {
    throw InvalidArgument("tolerances must be positive");
  }
  if (!(std::abs(rc.b0) <= 1)) throw InvalidArgument("--b0 must lie in [-1, 1]");
  if (rc.sign != 1 && rc.sign != -1) throw InvalidArgument("--sign must be 1 or -1");
  if (!(rc.dt > 0)) throw InvalidArgument("--dt must be positive");
}

fs::path output_dir(const RunConfig& rc) {
  fs::path dir = rc.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("WARPFLOW_OUTPUT_DIR");
    dir = env && *env ? fs::path(env) : fs::path("warpflow_out");
  }
  return dir;
}

fs::path prepare_dir(const RunConfig& rc) {
  const fs::path dir = output_dir(rc);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory " + dir.string());
  }
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

ode::Tolerances tolerances(const RunConfig& rc) {
  ode::Tolerances t;
  t.abs_tol = rc.abs_tol;
  t.rel_tol = rc.rel_tol;
  t.max_step = rc.max_step;
  return t;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

int cmd_validate(const RunConfig& rc, std::ostream& out) {
  const SurfaceModel m = parse_model(rc.model_spec);
  const fs::path dir = prepare_dir(rc);
  const ConditionReport rep = validate_conditions(m);
  json j = rep;
  j["model_label"] = m.label();
  j["all_ok"] = rep.all_ok();
  auto os = open_out(dir / "conditions.json");
  write_json(os, j);
  out << "model " << m.label() << "\n"
      << "  (A) g'' + g'^2 >= 0 : " << yes_no(rep.condA_ok) << "\n"
      << "  (B) periodic K      : "
      << (rep.condB_checkable ? yes_no(rep.condB_ok) : std::string("not checkable")) << "\n"
      << "  (C) slope bounds    : " << yes_no(rep.condC_ok) << "  (measured C1 = "
      << format_table(rep.measured_C1) << ", C2 = " << format_table(rep.measured_C2) << ")\n";
  if (rep.eta) out << "  eta                 : " << format_table(*rep.eta) << "\n";
  return rep.all_ok() ? kOk : kNegative;
}

int cmd_simulate(const RunConfig& rc, std::ostream& out) {
  const SurfaceModel m = parse_model(rc.model_spec);
  const fs::path dir = prepare_dir(rc);
  const double t_final = rc.t_final.value_or(50.0);
  const double x0 = rc.x0.value_or(m.sample_window().lo);
  IntegratorConfig icfg;
  icfg.tol = tolerances(rc);

  const Trajectory traj = integrate(m, unit_state(m, x0, rc.b0, rc.sign), t_final, icfg);
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, traj);
  }
  ScanConfig grid_cfg;
  grid_cfg.t_final = traj.horizon();
  grid_cfg.t_step = rc.t_step;
  const auto grid = grid_cfg.t_grid();
  const AverageSeries avg = average_series(m, traj.path(), grid);
  {
    auto os = open_out(dir / "average.csv");
    write_average_csv(os, avg);
  }
  out << "model " << m.label() << ", x0 = " << format_table(x0) << ", b0 = "
      << format_table(rc.b0) << ", horizon " << format_table(traj.horizon())
      << (traj.truncated() ? " (truncated)" : "") << "\n"
      << "  energy drift   " << format_table(traj.energy_drift()) << "\n"
      << "  Clairaut drift " << format_table(traj.clairaut_drift()) << "\n"
      << "  avg K at t = " << format_table(avg.t_grid.back()) << ": "
      << format_table(avg.avg.back()) << "\n";

  if (m.slope_bounds() && std::abs(rc.b0) < 1.0 - 1e-12) {
    std::vector<double> egrid{0.0};
    egrid.insert(egrid.end(), grid.begin(), grid.end());
    const EnvelopeCheck env = envelope_check(m, x0, rc.b0, egrid, icfg);
    auto os = open_out(dir / "envelope.csv");
    write_envelope_csv(os, env);
    out << "  envelope " << (env.inside ? "holds" : "violated") << ", min margin "
        << format_table(env.min_margin) << "\n";
  }
  if (rc.plots) render_plots(dir);
  return kOk;
}

int cmd_scan(const RunConfig& rc, std::ostream& out) {
  const SurfaceModel m = parse_model(rc.model_spec);
  const fs::path dir = prepare_dir(rc);
  ScanConfig cfg;
  cfg.n_geodesics = rc.n.value_or(64);
  cfg.seed = rc.seed;
  cfg.t_final = rc.t_final.value_or(50.0);
  cfg.t_step = rc.t_step;
  cfg.min_B = rc.min_B;
  cfg.workers = rc.workers;
  cfg.integrator.tol = tolerances(rc);
  const ScanReport rep = criterion_scan(m, cfg);
  {
    auto os = open_out(dir / "scan_report.json");
    write_json(os, rep);
  }
  {
    auto os = open_out(dir / "average_sup.csv");
    write_series_csv(os, "t,sup_avg", rep.sup_avg_at);
  }
  const auto failed = std::count_if(rep.geodesics.begin(), rep.geodesics.end(),
                                    [](const auto& g) { return !g.ok; });
  out << "model " << m.label() << ", " << rep.n_geodesics << " geodesics, seed " << rep.seed
      << ", t_final " << format_table(rep.t_final) << "\n"
      << "  sup avg at t_final  " << format_table(rep.final_sup()) << "\n"
      << "  verdict             " << to_string(rep.verdict) << "\n";
  if (rep.verdict == Verdict::criterion_met) {
    out << "  B estimate          " << format_table(rep.B_estimate) << "\n"
        << "  t0 estimate         " << format_table(*rep.t0_estimate) << "\n";
  }
  if (rep.floor) {
    out << "  theoretical floor   " << format_table(rep.floor->floor) << " (t* = "
        << format_table(rep.floor->t_star) << ")\n";
  }
  if (failed > 0) out << "  failed samples      " << failed << "\n";
  if (rc.plots) render_plots(dir);
  return rep.verdict == Verdict::criterion_met ? kOk : kNegative;
}

int cmd_green(const RunConfig& rc, std::ostream& out) {
  const SurfaceModel m = parse_model(rc.model_spec);
  const fs::path dir = prepare_dir(rc);
  const int n = rc.n.value_or(16);
  const double t_final = rc.t_final.value_or(10.0);
  const double x0 = rc.x0.value_or(m.sample_window().lo);
  LinearizationConfig lcfg;
  lcfg.orbit.tol = tolerances(rc);
  const GeodesicState theta0 = unit_state(m, x0, rc.b0, rc.sign);

  // Base points along one orbit, dt apart.
  const double sweep = std::max((n - 1) * rc.dt, rc.dt);
  const Trajectory base = integrate(m, theta0, sweep, lcfg.orbit);
  std::vector<GeodesicState> thetas;
  std::vector<double> t_theta;
  for (int i = 0; i < n && i * rc.dt <= base.horizon(); ++i) {
    t_theta.push_back(i * rc.dt);
    if (i == 0) {
      thetas.push_back(theta0);
    } else {
      // Dense output is not exactly unit speed; project back.
      const GeodesicState s = base.state_at(i * rc.dt, m);
      thetas.push_back(unit_state(m, s.x, std::clamp(s.vx, -1.0, 1.0), rc.sign, s.y));
    }
  }
  const auto sample_times = uniform_grid(0.0, t_final, 1.0);

  HyperbolicityStats st;
  try {
    st = hyperbolicity_stats(m, thetas, sample_times, lcfg);
  } catch (const ConjugatePointError& e) {
    out << "model " << m.label() << ": " << e.what() << "\n"
        << "  verdict             no Green bundles (conjugate points)\n";
    return kNegative;
  } catch (const BundleConvergenceError<1>& e) {
    out << "model " << m.label() << ": " << e.what() << "\n"
        << "  verdict             Green bundles not resolved (u_s ~ "
        << format_table(e.estimate().u_s(0, 0)) << ", u_u ~ "
        << format_table(e.estimate().u_u(0, 0)) << ")\n";
    return kNegative;
  }

  {
    auto os = open_out(dir / "bundles.csv");
    write_bundles_csv(os, t_theta, st.bundles);
  }
  // log|det Y| of the unstable frame along the orbit of theta0.
  const Trajectory orbit = integrate(m, theta0, t_final, lcfg.orbit);
  const auto grid = uniform_grid(0.0, orbit.horizon(), 0.05);
  const auto frames = propagate_jacobi(m, orbit, 1.0, st.bundles.front().u_u(0, 0), grid, lcfg);
  std::vector<std::pair<double, double>> logdet;
  for (const auto& f : frames) logdet.emplace_back(f.t, f.log_abs_det());
  {
    auto os = open_out(dir / "logdet.csv");
    write_series_csv(os, "t,logdet_u", logdet);
  }
  json j = st;
  j["model_label"] = m.label();
  j["det_exponent_u"] = det_exponent<1>(frames, 0.0, orbit.horizon());
  {
    auto os = open_out(dir / "hyperbolicity.json");
    write_json(os, j);
  }

  out << "model " << m.label() << ", " << thetas.size() << " base points\n"
      << "  min angle delta     " << format_table(st.min_angle_delta) << "\n"
      << "  D check             " << yes_no(st.D_check) << "\n"
      << "  det exponent (u)    " << format_table(j["det_exponent_u"].get<double>()) << "\n";
  if (st.stable) {
    out << "  lambda_s            " << format_table(st.stable->lambda) << " (C = "
        << format_table(st.stable->C) << ")\n";
  } else {
    out << "  lambda_s            none (not contracting on the sampled range)\n";
  }
  if (st.unstable) {
    out << "  lambda_u            " << format_table(st.unstable->lambda) << " (C = "
        << format_table(st.unstable->C) << ")\n";
  } else {
    out << "  lambda_u            none (not contracting on the sampled range)\n";
  }
  if (rc.plots) render_plots(dir);
  const bool ok = st.D_check && st.stable && st.unstable && st.stable->envelope_holds &&
                  st.unstable->envelope_holds;
  return ok ? kOk : kNegative;
}

int cmd_floor(const RunConfig& rc, std::ostream& out) {
  const SurfaceModel m = parse_model(rc.model_spec);
  const fs::path dir = prepare_dir(rc);
  json j;
  j["model_label"] = m.label();
  int code = kOk;
  try {
    const Floor fl = theoretical_floor(m);
    j["applicable"] = true;
    j["floor"] = fl;
    out << "model " << m.label() << "\n"
        << "  eta     " << format_table(fl.eta) << "\n"
        << "  T       " << format_table(fl.period) << "\n"
        << "  C1      " << format_table(fl.c1) << "\n"
        << "  A       " << format_table(fl.A) << "\n"
        << "  floor   " << format_table(fl.floor) << "\n"
        << "  t_star  " << format_table(fl.t_star) << "\n";
  } catch (const ConditionsNotSatisfied& e) {
    j["applicable"] = false;
    j["reason"] = e.what();
    out << "model " << m.label() << ": floor not applicable: " << e.what() << "\n";
    code = kNegative;
  }
  auto os = open_out(dir / "floor.json");
  write_json(os, j);
  return code;
}

std::optional<json> load(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  return read_json(in);
}

int cmd_report(const RunConfig& rc, std::ostream& out) {
  const fs::path dir = output_dir(rc);
  if (!fs::is_directory(dir)) throw Error("output directory " + dir.string() + " does not exist");
  const auto conditions = load(dir / "conditions.json");
  const auto floor_j = load(dir / "floor.json");
  const auto scan_j = load(dir / "scan_report.json");
  const auto hyp_j = load(dir / "hyperbolicity.json");
  const bool have_csv = fs::exists(dir / "trajectory.csv") || fs::exists(dir / "average.csv");
  if (!conditions && !floor_j && !scan_j && !hyp_j && !have_csv) {
    throw Error("no artifacts found in " + dir.string());
  }

  std::ostringstream table;
  auto row = [&table](const std::string& k, const std::string& v) {
    table << "  " << std::left << std::setw(28) << k << v << "\n";
  };
  table << "warpflow report for " << dir.string() << "\n";

  std::optional<Floor> floor;
  if (conditions) {
    const auto rep = conditions->get<ConditionReport>();
    row("model", conditions->at("model_label").get<std::string>());
    row("conditions (A)/(B)/(C)",
        yes_no(rep.condA_ok) + "/" + yes_no(rep.condB_ok) + "/" + yes_no(rep.condC_ok));
    if (rep.eta) row("eta", format_table(*rep.eta));
  }
  if (floor_j) {
    if (!conditions) row("model", floor_j->at("model_label").get<std::string>());
    if (floor_j->at("applicable").get<bool>()) {
      floor = floor_j->at("floor").get<Floor>();
    } else {
      row("floor", "not applicable");
    }
  }
  if (scan_j) {
    const auto rep = scan_j->get<ScanReport>();
    if (!floor && rep.floor) floor = rep.floor;
    if (!conditions && !floor_j) row("model", rep.model_label);
    row("scan geodesics / seed", std::to_string(rep.n_geodesics) + " / " + std::to_string(rep.seed));
    row("scan t_final", format_table(rep.t_final));
    row("measured sup avg", format_table(rep.final_sup()));
    row("scan verdict", to_string(rep.verdict));
    if (rep.verdict == Verdict::criterion_met) {
      row("B estimate", format_table(rep.B_estimate));
      row("t0 estimate", format_table(*rep.t0_estimate));
    }
    if (floor) {
      row("floor", format_table(floor->floor));
      row("t_star", format_table(floor->t_star));
      row("sup avg <= floor + 1e-3", yes_no(rep.final_sup() <= floor->floor + 1e-3));
    }
  } else if (floor) {
    row("floor", format_table(floor->floor));
    row("t_star", format_table(floor->t_star));
  }
  if (hyp_j) {
    const auto st = hyp_j->get<HyperbolicityStats>();
    if (!conditions && !floor_j && !scan_j) row("model", hyp_j->at("model_label").get<std::string>());
    row("bundle base points", std::to_string(st.bundles.size()));
    row("min angle delta", format_table(st.min_angle_delta));
    row("D check", yes_no(st.D_check));
    row("lambda_s", st.stable ? format_table(st.stable->lambda) : "none");
    row("lambda_u", st.unstable ? format_table(st.unstable->lambda) : "none");
    if (hyp_j->contains("det_exponent_u")) {
      row("det exponent (unstable)", format_table(hyp_j->at("det_exponent_u").get<double>()));
    }
  }
  if (rc.plots) {
    for (const auto& p : render_plots(dir)) row("plot", p.filename().string());
  }
  auto os = open_out(dir / "report.txt");
  os << table.str();
  out << table.str();
  return kOk;
}

plot::Series column_series(const std::vector<std::vector<double>>& rows, std::size_t col,
                           std::string label, std::string color, bool dashed = false) {
  plot::Series s;
  s.label = std::move(label);
  s.color = std::move(color);
  s.dashed = dashed;
  for (const auto& r : rows) {
    if (r.size() > col) s.points.emplace_back(r[0], r[col]);
  }
  return s;
}

std::vector<std::vector<double>> load_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  return read_csv(in);
}

}  // namespace

std::vector<fs::path> render_plots(const fs::path& dir) {
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const plot::Figure& fig) {
    const fs::path p = dir / name;
    auto os = open_out(p);
    plot::write_svg(os, fig);
    written.push_back(p);
  };

  if (fs::exists(dir / "average_sup.csv")) {
    const auto rows = load_csv(dir / "average_sup.csv");
    plot::Figure fig{"sup over geodesics of the curvature average", "t", "sup avg", {}};
    fig.series.push_back(column_series(rows, 1, "sup avg", "#1f77b4"));
    std::optional<Floor> floor;
    if (const auto j = load(dir / "floor.json"); j && j->at("applicable").get<bool>()) {
      floor = j->at("floor").get<Floor>();
    } else if (const auto s = load(dir / "scan_report.json"); s && !s->at("floor").is_null()) {
      floor = s->at("floor").get<Floor>();
    }
    if (floor && !rows.empty()) {
      fig.series.push_back({"floor", {{rows.front()[0], floor->floor}, {rows.back()[0], floor->floor}},
                            "#d62728", true});
    }
    emit("average_sup.svg", fig);
  }
  if (fs::exists(dir / "average.csv")) {
    const auto rows = load_csv(dir / "average.csv");
    emit("average.svg", {"curvature average along the orbit", "t", "avg K",
                         {column_series(rows, 1, "avg", "#1f77b4")}});
  }
  if (fs::exists(dir / "logdet.csv")) {
    const auto rows = load_csv(dir / "logdet.csv");
    emit("logdet.svg", {"log |det Y| of the unstable frame", "t", "log |det Y|",
                        {column_series(rows, 1, "unstable", "#2ca02c")}});
  }
  if (fs::exists(dir / "envelope.csv")) {
    const auto rows = load_csv(dir / "envelope.csv");
    emit("envelope.svg", {"x'(t) and its envelope", "t", "b",
                          {column_series(rows, 1, "b(t)", "#1f77b4"),
                           column_series(rows, 2, "lower", "#d62728", true),
                           column_series(rows, 3, "upper", "#ff7f0e", true)}});
  }
  return written;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geodesic flows on warped-product surfaces", "warpflow"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&rc](CLI::App* sub) {
    sub->add_option("--model", rc.model_spec,
                    "flat, hyperbolic[:rate=r], exp_family:a=A, example2, catenoid, sphere_band");
    sub->add_option("--out", rc.out_dir, "output directory (default $WARPFLOW_OUTPUT_DIR)");
    sub->add_option("--config", rc.config_path, "JSON config; flags override it");
    sub->add_flag("--plots", rc.plots, "write SVG plots");
    sub->add_option("--abs-tol", rc.abs_tol);
    sub->add_option("--rel-tol", rc.rel_tol);
    sub->add_option("--max-step", rc.max_step);
  };
  auto add_orbit = [&rc](CLI::App* sub) {
    sub->add_option("--t-final", rc.t_final, "time horizon");
    sub->add_option("--x0", rc.x0, "initial x (default: left end of the sample window)");
    sub->add_option("--b0", rc.b0, "initial x'");
    sub->add_option("--sign", rc.sign, "sign of y'");
  };

  auto* validate = app.add_subcommand("validate", "check conditions (A)-(C)");
  add_common(validate);
  auto* simulate = app.add_subcommand("simulate", "integrate one geodesic");
  add_common(simulate);
  add_orbit(simulate);
  simulate->add_option("--t-step", rc.t_step, "averaging grid step");
  auto* scan = app.add_subcommand("scan", "averaged-curvature criterion over sampled geodesics");
  add_common(scan);
  scan->add_option("--t-final", rc.t_final, "time horizon");
  scan->add_option("--n", rc.n, "number of geodesics");
  scan->add_option("--seed", rc.seed);
  scan->add_option("--t-step", rc.t_step, "averaging grid step");
  scan->add_option("--min-b", rc.min_B, "smallest B counted as criterion met");
  scan->add_option("--workers", rc.workers);
  auto* green = app.add_subcommand("green", "Green bundles, angle and contraction statistics");
  add_common(green);
  add_orbit(green);
  green->add_option("--n", rc.n, "number of base points along the orbit");
  green->add_option("--dt", rc.dt, "spacing of base points");
  auto* floor = app.add_subcommand("floor", "theoretical floor and t_star");
  add_common(floor);
  auto* report = app.add_subcommand("report", "summarise artifacts in the output directory");
  report->add_option("--out", rc.out_dir);
  report->add_flag("--plots", rc.plots, "write SVG plots");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }

  CLI::App* sub = app.get_subcommands().front();
  rc.command = sub->get_name();
  try {
    if (!rc.config_path.empty()) apply_config(rc, *sub);
    check_config(rc);
    if (rc.command == "validate") return cmd_validate(rc, out);
    if (rc.command == "simulate") return cmd_simulate(rc, out);
    if (rc.command == "scan") return cmd_scan(rc, out);
    if (rc.command == "green") return cmd_green(rc, out);
    if (rc.command == "floor") return cmd_floor(rc, out);
    return cmd_report(rc, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

}  // namespace warpflow::cli
