// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (0 when everything passes).

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "warpflow/diagnostics.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/geodesics.hpp"
#include "warpflow/linearization.hpp"
#include "warpflow/surfaces.hpp"

namespace {

using namespace warpflow;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

// Collects sub-checks of one criterion; the first failure is kept as the reason.
struct Check {
  bool ok = true;
  std::string detail;
  std::string failure;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) failure = what;
    ok = ok && cond;
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Square<1> s1(double v) { return Square<1>::Constant(v); }

CurvatureProfile<1> constant_k(double k) {
  return [k](double) { return s1(k); };
}

// Green bundle, falling back to the attached estimate when the doubling does
// not settle (U_r ~ 1/r on flat ends).
BundleEstimate<1> bundle_or_estimate(const SurfaceModel& m, const GeodesicState& theta) {
  try {
    return green_bundle(m, theta);
  } catch (const BundleConvergenceError<1>& e) {
    return e.estimate();
  }
}

Check constant_curvature() {
  Check c;
  const auto m = make_hyperbolic();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_avg = 0;
  for (int i = 0; i < 10; ++i) {
    const auto traj = integrate(m, unit_state(m, 3 * u(rng), u(rng), u(rng) < 0 ? -1 : 1), 50.0);
    worst_avg = std::max(worst_avg, std::abs(average_curvature(m, traj, 50.0) + 1));
  }
  c.expect(worst_avg <= 1e-8, "average_curvature off by " + fmt(worst_avg));

  const auto theta = unit_state(m, 0.2, 0.4);
  const auto est = green_bundle(m, theta);
  const double eu = std::abs(est.u_u(0, 0) - 1), es = std::abs(est.u_s(0, 0) + 1);
  c.expect(eu <= 1e-6 && es <= 1e-6, "bundles off by " + fmt(std::max(eu, es)));

  const auto traj = integrate(m, theta, 10.0);
  const auto frames = propagate_jacobi(m, traj, 1.0, est.u_u(0, 0), uniform_grid(0.0, 10.0, 0.05));
  const double rate = det_exponent<1>(frames, 0.0, 10.0);
  c.expect(std::abs(rate - 1) <= 1e-3, "det exponent " + fmt(rate));

  const std::vector<BundleEstimate<1>> one{est};
  const double delta = angle_diagnostic(one).delta;
  c.expect(std::abs(delta - kPi / 2) <= 1e-6, "delta " + fmt(delta));
  c.note("max |avg+1| " + fmt(worst_avg) + ", u_u " + fmt(est.u_u(0, 0)) + ", u_s " +
         fmt(est.u_s(0, 0)) + ", det exponent " + fmt(rate) + ", delta " + fmt(delta));
  return c;
}

Check example1() {
  Check c;
  const auto m = make_exp_family(3.0);
  const Floor fl = theoretical_floor(m);
  c.expect(std::abs(fl.floor + 0.625) <= 1e-6, "floor " + fmt(fl.floor));
  c.expect(std::abs(fl.t_star - 51.0) <= 0.05, "t_star " + fmt(fl.t_star));

  ScanConfig cfg;
  cfg.n_geodesics = 256;
  cfg.t_final = 60;
  cfg.seed = 7;
  cfg.workers = workers();
  const auto start = std::chrono::steady_clock::now();
  const auto rep = criterion_scan(m, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(rep.final_sup() <= -0.625 + 1e-3, "sup avg(60) " + fmt(rep.final_sup()));
  c.expect(rep.verdict == Verdict::criterion_met, "verdict " + to_string(rep.verdict));
  c.expect(secs < 120, "scan took " + fmt(secs) + " s");
  c.note("floor " + fmt(fl.floor) + ", t_star " + fmt(fl.t_star) + ", sup avg(60) " +
         fmt(rep.final_sup()) + ", " + to_string(rep.verdict) + ", scan " + fmt(secs) + " s");
  return c;
}

Check example2() {
  Check c;
  const auto m = make_example2();
  const auto ray = integrate_reduced(m, 0.0, 1.0, 100.0);
  const double avg = average_curvature(m, ray.path, 100.0);
  const double closed = -(1 - std::exp(-100.0)) / 100 - (1 - std::exp(-200.0)) / 200;
  c.expect(std::abs(avg + 0.015) <= 1e-4, "ray average " + fmt(avg));
  c.expect(std::abs(avg - closed) <= 1e-4, "ray average vs closed form " + fmt(avg - closed));

  ScanConfig cfg;
  cfg.n_geodesics = 64;
  cfg.t_final = 200;
  cfg.workers = workers();
  const auto rep = criterion_scan(m, cfg);
  c.expect(rep.verdict == Verdict::criterion_failed, "verdict " + to_string(rep.verdict));

  const fs::path dir = fs::temp_directory_path() / "warpflow_acceptance_example2";
  std::ostringstream out, err;
  const int code = cli::run({"scan", "--model", "example2", "--t-final", "200", "--n", "64",
                             "--seed", "7", "--out", dir.string()},
                            out, err);
  fs::remove_all(dir);
  c.expect(code == cli::kNegative, "CLI exit code " + std::to_string(code));
  c.note("ray average(100) " + fmt(avg) + ", " + to_string(rep.verdict) + ", CLI exit " +
         std::to_string(code));
  return c;
}

Check envelope() {
  Check c;
  const auto m = make_hyperbolic(1.0);
  const auto grid = uniform_grid(0.1, 20.0, 0.1);
  double worst = 0;
  for (double b0 : {-0.9, 0.0, 0.5}) {
    const auto orbit = integrate_reduced(m, 0.0, b0, 20.0, {}, grid);
    for (std::size_t i = 0; i < orbit.times.size(); ++i) {
      worst = std::max(worst, std::abs(orbit.b[i] - std::tanh(orbit.times[i] + std::atanh(b0))));
    }
  }
  c.expect(worst <= 1e-8, "max |b - tanh| " + fmt(worst));

  const auto g3 = make_exp_family(3.0);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto egrid = uniform_grid(0.0, 20.0, 0.25);
  int inside = 0;
  double margin = INFINITY;
  for (int i = 0; i < 32; ++i) {
    const double x0 = 2 * kPi * u(rng);
    const double b0 = 1.98 * u(rng) - 0.99;
    const auto env = envelope_check(g3, x0, b0, egrid);
    inside += env.inside;
    margin = std::min(margin, env.min_margin);
  }
  c.expect(inside == 32, std::to_string(32 - inside) + " envelope violations");
  c.note("max |b - tanh| " + fmt(worst) + ", g3 envelope " + std::to_string(inside) +
         "/32, min margin " + fmt(margin));
  return c;
}

Check liouville() {
  Check c;
  struct Case {
    const char* model;
    double x0, b0;
  };
  const std::vector<Case> cases{{"hyperbolic", 0.2, 0.4},  {"exp_family:a=3", 0.3, 0.2},
                                {"example2", 12.0, 0.5},   {"flat", 0.0, 0.3},
                                {"catenoid", 0.5, -0.3}};
  const auto grid = uniform_grid(0.0, 50.0, 5e-4);
  double worst = 0;
  for (const auto& k : cases) {
    const auto m = parse_model(k.model);
    const auto theta = unit_state(m, k.x0, k.b0);
    const auto est = bundle_or_estimate(m, theta);
    const auto traj = integrate(m, theta, 50.0);
    const auto frames = propagate_jacobi(m, traj, 1.0, est.u_u(0, 0), grid);
    const auto ric = riccati_flow(m, traj, est.u_u(0, 0), grid);
    const double r = liouville_residual<1>(frames, ric);
    c.expect(r < 1e-5, std::string(k.model) + " residual " + fmt(r));
    worst = std::max(worst, r);
  }
  // No Green bundles on K = +1; the formula is checked on Y = cos t, away
  // from its zero at pi/2 where centered differences of log|cos t| degrade.
  {
    const auto m = make_spherical_band();
    const auto traj = integrate(m, unit_state(m, 0.0, 0.0), 1.0);
    const auto sgrid = uniform_grid(0.0, 1.0, 5e-4);
    const double r = liouville_residual<1>(propagate_jacobi(m, traj, 1.0, 0.0, sgrid),
                                           riccati_flow(m, traj, 0.0, sgrid));
    c.expect(r < 1e-5, "sphere_band residual " + fmt(r));
    worst = std::max(worst, r);
  }

  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(3, 3);
  R.diagonal() << -1, -2, -3;
  const auto src = constant_source<Eigen::Dynamic>(R);
  const auto est = green_bundle<Eigen::Dynamic>(src);
  auto [profile, reached] = src.extend(40.0, false);
  const auto g3 = uniform_grid(0.0, 40.0, 1e-3);
  const auto frames =
      propagate_jacobi<Eigen::Dynamic>(profile, Eigen::MatrixXd::Identity(3, 3), est.u_u, g3);
  const auto ric = riccati_flow<Eigen::Dynamic>(profile, est.u_u, g3);
  const double r3 = liouville_residual<Eigen::Dynamic>(frames, ric);
  const double rate = det_exponent<Eigen::Dynamic>(frames, 10.0, 40.0);
  const double expected = 1 + std::sqrt(2.0) + std::sqrt(3.0);
  c.expect(r3 < 1e-5, "3D residual " + fmt(r3));
  c.expect(std::abs(rate - expected) <= 1e-2, "3D det exponent " + fmt(rate));
  c.note("max surface residual " + fmt(worst) + ", 3D residual " + fmt(r3) +
         ", 3D det exponent " + fmt(rate) + " (expected " + fmt(expected) + ")");
  return c;
}

Check conjugate_points() {
  Check c;
  const auto states = riccati_flow<1>(constant_k(1.0), s1(0.0), uniform_grid(0.0, 3.0, 0.1));
  const bool blew = !states.empty() && states.back().blowup_time.has_value();
  const double tb = blew ? *states.back().blowup_time : NAN;
  c.expect(blew && std::abs(tb - kPi / 2) <= 1e-3, "blow-up time " + fmt(tb));

  const auto m = make_spherical_band();
  const auto equator = integrate(m, unit_state(m, 0.0, 0.0), 3.0);
  const auto surf = riccati_flow(m, equator, 0.0, uniform_grid(0.0, 3.0, 0.1));
  const bool surf_blew = !surf.empty() && surf.back().blowup_time.has_value();
  const double ts = surf_blew ? *surf.back().blowup_time : NAN;
  c.expect(surf_blew && std::abs(ts - kPi / 2) <= 1e-3, "surface blow-up time " + fmt(ts));

  std::string raised = "none";
  try {
    green_bundle(m, unit_state(m, 0.0, 0.0));
  } catch (const ConjugatePointError& e) {
    raised = "conjugate point at t = " + fmt(e.time());
  }
  c.expect(raised != "none", "green_bundle did not report a conjugate point");
  c.note("blow-up " + fmt(tb) + " (profile), " + fmt(ts) + " (sphere_band); green_bundle: " + raised);
  return c;
}

Check angle_bound_and_contraction() {
  Check c;
  const auto g3 = make_exp_family(3.0);
  std::mt19937_64 rng(64);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BundleEstimate<1>> bundles;
  for (int i = 0; i < 64; ++i) {
    const auto theta = unit_state(g3, 2 * kPi * u(rng), 1.98 * u(rng) - 0.99, u(rng) < 0.5 ? 1 : -1);
    bundles.push_back(green_bundle(g3, theta));
  }
  const auto ad = angle_diagnostic(bundles);
  c.expect(ad.D_check, "D check failed (delta " + fmt(ad.delta) + ")");

  const auto h = make_hyperbolic();
  const auto times = uniform_grid(0.0, 10.0, 0.5);
  const auto norms = stable_frame_norms<1>(orbit_source(h, unit_state(h, 0.1, 0.3)), false, times);
  std::vector<std::pair<double, double>> samples;
  for (std::size_t i = 0; i < times.size(); ++i) samples.emplace_back(times[i], norms[i]);
  const auto fit = contraction_fit(samples);
  const double rel = std::abs(fit.lambda / std::exp(-1.0) - 1);
  c.expect(rel <= 0.02, "lambda " + fmt(fit.lambda));
  bool every = true;
  for (const auto& [t, f] : samples) every = every && f <= fit.C * std::pow(fit.lambda, t) * (1 + 1e-12);
  c.expect(every && fit.envelope_holds, "envelope f <= C lambda^t violated");
  c.note("64 g3 bundles: delta " + fmt(ad.delta) + ", D check " + (ad.D_check ? "yes" : "no") +
         "; K = -1: lambda " + fmt(fit.lambda) + ", C " + fmt(fit.C));
  return c;
}

double state_error(const GeodesicState& a, const GeodesicState& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.vx - b.vx),
                   std::abs(a.vy - b.vy)});
}

Check conservation() {
  Check c;
  struct Case {
    const char* model;
    double x0, b0;
  };
  const std::vector<Case> cases{{"flat", 0.0, 0.3},    {"hyperbolic", 0.0, 0.0},
                                {"exp_family:a=3", 0.5, -0.6}, {"example2", 0.0, 0.95},
                                {"catenoid", 0.0, 0.3}, {"sphere_band", 0.0, 0.5}};
  double drift = 0;
  for (const auto& k : cases) {
    const auto m = parse_model(k.model);
    const auto traj = integrate(m, unit_state(m, k.x0, k.b0), 1000.0);
    const double d = std::max(traj.energy_drift(), traj.clairaut_drift());
    c.expect(traj.horizon() == 1000.0 && d < 1e-7, std::string(k.model) + " drift " + fmt(d));
    drift = std::max(drift, d);
  }

  double rt = 0;
  for (const auto& [spec, t] : std::vector<std::pair<const char*, double>>{
           {"exp_family:a=3", 2.0}, {"hyperbolic", 10.0}, {"catenoid", 10.0}, {"flat", 10.0}}) {
    const auto m = parse_model(spec);
    const auto s0 = unit_state(m, 0.3, -0.2);
    const auto fwd = integrate(m, s0, t);
    const auto back = integrate(m, reversed(fwd.states().back()), t);
    rt = std::max(rt, state_error(reversed(back.states().back()), s0));
  }
  c.expect(rt < 1e-6, "time reversal error " + fmt(rt));

  ScanConfig cfg;
  cfg.n_geodesics = 32;
  cfg.t_final = 30;
  cfg.seed = 7;
  const auto m = make_exp_family(3.0);
  const auto one = criterion_scan(m, cfg);
  cfg.workers = std::max(2, workers());
  const auto many = criterion_scan(m, cfg);
  c.expect(one == many, "scan differs between 1 and " + std::to_string(cfg.workers) + " workers");
  c.note("max drift " + fmt(drift) + ", reversal error " + fmt(rt) + ", scans identical across 1/" +
         std::to_string(cfg.workers) + " workers: " + (one == many ? "yes" : "no"));
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
      {"constant-curvature oracles", constant_curvature},
      {"example 1 floor and scan", example1},
      {"example 2 ray average and verdict", example2},
      {"reduced equation and envelope", envelope},
      {"Liouville formula", liouville},
      {"conjugate-point detection", conjugate_points},
      {"angle bound and contraction envelope", angle_bound_and_contraction},
      {"conservation and reproducibility", conservation}};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.failure = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !c.ok;
    std::printf("%s [%zu] %s (%.1f s): %s%s%s\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first,
                secs, c.detail.c_str(), c.ok ? "" : " -- ", c.ok ? "" : c.failure.c_str());
    std::fflush(stdout);
  }
  return failed;
}
