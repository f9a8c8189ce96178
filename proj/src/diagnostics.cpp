#include "warpflow/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "warpflow/errors.hpp"

namespace warpflow {

namespace {

void check_horizon(const CoordinatePath& path, double t) {
  if (!(t > 0)) throw InvalidArgument("averaging time must be positive");
  if (t > path.horizon() * (1 + 1e-14)) {
    throw InvalidArgument("averaging time " + std::to_string(t) +
                          " exceeds the trajectory horizon " +
                          std::to_string(path.horizon()));
  }
}

}  // namespace

double average_curvature(const SurfaceModel& m, const CoordinatePath& path, double t) {
  check_horizon(path, t);
  return path.integrate([&m](double x) { return curvature(m, x); }, t) / t;
}

double average_curvature(const SurfaceModel& m, const Trajectory& traj, double t) {
  return average_curvature(m, traj.path(), t);
}

AverageSeries average_series(const CoordinatePath& path,
                             const std::function<double(double)>& k,
                             std::span<const double> t_grid) {
  AverageSeries out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  out.avg.reserve(t_grid.size());
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw InvalidArgument("averaging grid must be increasing");
  }
  const auto nodes = path.nodes();
  double cumulative = 0.0;  // integral up to nodes[i].t
  std::size_t i = 0;
  for (double t : t_grid) {
    check_horizon(path, t);
    while (i + 1 < nodes.size() && nodes[i + 1].t <= t) {
      const auto& n0 = nodes[i];
      const auto& n1 = nodes[i + 1];
      cumulative += quadrature::gauss_legendre5(
          [&](double s) { return k(CoordinatePath::hermite5(n0, n1, s)); }, n0.t, n1.t);
      ++i;
    }
    double partial = cumulative;
    if (i + 1 < nodes.size() && t > nodes[i].t) {
      const auto& n0 = nodes[i];
      const auto& n1 = nodes[i + 1];
      partial += quadrature::gauss_legendre5(
          [&](double s) { return k(CoordinatePath::hermite5(n0, n1, s)); }, n0.t, t);
    }
    out.avg.push_back(partial / t);
  }
  return out;
}

AverageSeries average_series(const SurfaceModel& m, const CoordinatePath& path,
                             std::span<const double> t_grid) {
  return average_series(path, [&m](double x) { return curvature(m, x); }, t_grid);
}

double ricci_average(const SurfaceModel& m, const Trajectory& traj, double t) {
  return average_curvature(m, traj, t);
}

Floor theoretical_floor(const SurfaceModel& m, const ValidationConfig& cfg) {
  const ConditionReport rep = validate_conditions(m, cfg);
  if (!rep.all_ok()) {
    throw ConditionsNotSatisfied("model " + m.label() + " fails conditions:" +
                                 (rep.condA_ok ? "" : " (A)") +
                                 (rep.condB_ok ? "" : " (B)") +
                                 (rep.condC_ok ? "" : " (C)"));
  }
  if (!rep.eta || !(*rep.eta < 0)) {
    throw ConditionsNotSatisfied("model " + m.label() + " has eta >= 0");
  }
  Floor fl;
  fl.eta = *rep.eta;
  fl.period = *m.period();
  fl.c1 = m.slope_bounds() ? m.slope_bounds()->c1 : rep.measured_C1;
  fl.A = 2.0 / fl.c1 * std::log(3.0);
  const double T = fl.period;
  fl.floor = std::max(fl.eta / (16 * T), fl.eta / (8 * T + 2 * fl.A));
  fl.t_star = 4 * T + std::max(fl.A + 4 * T, 2 * fl.A);
  return fl;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::criterion_met: return "criterion_met";
    case Verdict::criterion_failed: return "criterion_failed";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "criterion_met") return Verdict::criterion_met;
  if (s == "criterion_failed") return Verdict::criterion_failed;
  if (s == "inconclusive") return Verdict::inconclusive;
  throw InvalidArgument("unknown verdict '" + s + "'");
}

std::vector<double> ScanConfig::t_grid() const {
  if (!(t_final > 0) || !(t_step > 0)) {
    throw InvalidArgument("t_final and t_step must be positive");
  }
  if (t_final <= t_step) return {t_final};
  return uniform_grid(t_step, t_final, t_step);
}

namespace {

struct Sample {
  double x0;
  double b0;
  int sign;
};

std::vector<Sample> draw_samples(const ScanConfig& cfg, const Interval& window) {
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(cfg.n_geodesics));
  if (cfg.include_meridian) out.push_back({window.lo, 1.0, 1});
  while (out.size() < static_cast<std::size_t>(cfg.n_geodesics)) {
    Sample s;
    s.x0 = window.lo + uniform() * window.length();
    s.b0 = 2 * uniform() - 1;
    s.sign = uniform() < 0.5 ? 1 : -1;
    out.push_back(s);
  }
  return out;
}

struct SampleResult {
  GeodesicSummary summary;
  std::vector<double> avg;
};

SampleResult run_sample(const SurfaceModel& m, const ScanConfig& cfg,
                        std::span<const double> grid, int index, const Sample& s) {
  SampleResult r;
  r.summary.index = index;
  r.summary.x0 = s.x0;
  r.summary.b0 = s.b0;
  r.summary.sign = s.sign;
  try {
    const ReducedOrbit orbit = integrate_reduced(m, s.x0, s.b0, cfg.t_final, cfg.integrator, grid);
    if (orbit.truncated) throw IntegrationError("orbit hit the curvature cap", orbit.times.back());
    r.avg = average_series(m, orbit.path, grid).avg;
    r.summary.final_avg = r.avg.back();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] >= cfg.t_final / 2) worst = std::max(worst, r.avg[i]);
    }
    r.summary.max_avg_after_half = worst;
  } catch (const std::exception& e) {
    r.summary.ok = false;
    r.summary.error = e.what();
    r.avg.clear();
  }
  return r;
}

}  // namespace

ScanReport criterion_scan(const SurfaceModel& m, const ScanConfig& cfg) {
  if (cfg.n_geodesics < 1) throw InvalidArgument("n_geodesics must be at least 1");
  if (!(cfg.min_B >= 0)) throw InvalidArgument("min_B must be non-negative");
  const std::vector<double> grid = cfg.t_grid();
  Interval window = m.sample_window();
  if (cfg.window) window = *cfg.window;
  const auto samples = draw_samples(cfg, window);

  std::vector<SampleResult> results(samples.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      results[i] = run_sample(m, cfg, grid, static_cast<int>(i), samples[i]);
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(samples.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  ScanReport rep;
  rep.model_label = m.label();
  rep.n_geodesics = cfg.n_geodesics;
  rep.seed = cfg.seed;
  rep.t_final = cfg.t_final;
  rep.t_step = cfg.t_step;
  rep.min_B = cfg.min_B;
  rep.window = window;

  bool all_ok = true;
  std::vector<double> sup(grid.size(), -std::numeric_limits<double>::infinity());
  for (auto& r : results) {
    all_ok = all_ok && r.summary.ok;
    for (std::size_t i = 0; i < r.avg.size(); ++i) sup[i] = std::max(sup[i], r.avg[i]);
    rep.geodesics.push_back(std::move(r.summary));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) rep.sup_avg_at.emplace_back(grid[i], sup[i]);
  for (const auto& [t, s] : rep.sup_avg_at) {
    if (s < 0) {
      rep.t_star = t;
      break;
    }
  }

  if (!all_ok || !std::isfinite(sup.back())) {
    rep.verdict = Verdict::inconclusive;
  } else if (sup.back() <= -cfg.min_B) {
    rep.verdict = Verdict::criterion_met;
  } else {
    rep.verdict = Verdict::criterion_failed;
  }

  if (rep.verdict == Verdict::criterion_met) {
    rep.B_estimate = -sup.back();
    // First grid time from which sup stays at or below -B.
    std::size_t first = grid.size() - 1;
    while (first > 0 && sup[first - 1] <= -rep.B_estimate) --first;
    rep.t0_estimate = grid[first];
  }

  try {
    rep.floor = theoretical_floor(m);
  } catch (const ConditionsNotSatisfied&) {
  }
  return rep;
}

double sasaki_cos(double u_s, double u_u) {
  return (1 + u_s * u_u) / std::sqrt((1 + u_s * u_s) * (1 + u_u * u_u));
}

AngleDiagnostic angle_diagnostic(std::span<const BundleEstimate<1>> bundles) {
  if (bundles.empty()) throw InvalidArgument("no bundle estimates");
  AngleDiagnostic out;
  out.delta = std::numeric_limits<double>::infinity();
  out.min_sum = std::numeric_limits<double>::infinity();
  for (const auto& b : bundles) {
    if (!b.converged) throw InvalidArgument("angle diagnostic needs converged estimates");
    const double us = b.u_s(0, 0);
    const double uu = b.u_u(0, 0);
    const double c = std::clamp(sasaki_cos(us, uu), -1.0, 1.0);
    out.delta = std::min(out.delta, std::acos(c));
    out.min_sum = std::min(out.min_sum, us * us + uu * uu);
  }
  const double cd = std::cos(out.delta);
  out.D_bound = (1 - cd) / (1 + cd);
  out.D_check = out.min_sum >= out.D_bound - 1e-9;
  return out;
}

ContractionFit contraction_fit(std::span<const std::pair<double, double>> samples) {
  if (samples.empty()) throw InvalidArgument("no samples");
  std::vector<std::pair<double, double>> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  ContractionFit fit;
  fit.F = 0.0;
  for (const auto& [t, f] : s) {
    if (!std::isfinite(f) || f < 0) throw InvalidArgument("samples must be finite and non-negative");
    fit.F = std::max(fit.F, f);
  }
  const auto hit = std::find_if(s.begin(), s.end(),
                                [](const auto& p) { return p.first > 0 && p.second < 1; });
  if (hit == s.end()) {
    throw NotContractingError("no sampled time r > 0 with f(r) < 1");
  }
  fit.r = hit->first;
  fit.b = hit->second;
  if (fit.b <= 0) throw NotContractingError("f(r) = 0; envelope is degenerate");
  fit.C = fit.F / fit.b;
  fit.lambda = std::pow(fit.b, 1.0 / fit.r);
  fit.envelope_holds = std::all_of(s.begin(), s.end(), [&](const auto& p) {
    return p.second <= fit.C * std::pow(fit.lambda, p.first) * (1 + 1e-12);
  });
  return fit;
}

FlatnessReport asymptotic_flatness(const SurfaceModel& m, double x_origin,
                                   std::span<const double> radii,
                                   const FlatnessConfig& cfg) {
  if (radii.empty()) throw InvalidArgument("no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw InvalidArgument("radii must be positive and increasing");
    }
  }
  if (!(cfg.step > 0) || !(cfg.window > 0)) throw InvalidArgument("bad flatness grid");

  // |K| at distance d on either side, sampled on a grid of d.
  const long n = std::lround(std::ceil(cfg.window / cfg.step));
  std::vector<double> tail(static_cast<std::size_t>(n) + 2, 0.0);  // sup over d >= d_i
  auto abs_k = [&m](double x) {
    const double k = m.raw_curvature(x);
    return std::isfinite(k) ? std::abs(k) : std::numeric_limits<double>::infinity();
  };
  for (long i = n; i >= 0; --i) {
    const double d = std::min(static_cast<double>(i) * cfg.step, cfg.window);
    const double v = std::max(abs_k(x_origin - d), abs_k(x_origin + d));
    tail[static_cast<std::size_t>(i)] = std::max(v, tail[static_cast<std::size_t>(i) + 1]);
  }

  FlatnessReport rep;
  rep.window = cfg.window;
  rep.tol = cfg.tol;
  rep.radii.assign(radii.begin(), radii.end());
  for (double r : radii) {
    if (r > cfg.window) throw InvalidArgument("radius exceeds the truncation window");
    const long i = std::lround(std::ceil(r / cfg.step - 1e-9));
    // Include the exact radius as well as the grid beyond it.
    const double at_r = std::max(abs_k(x_origin - r), abs_k(x_origin + r));
    rep.decay.push_back(std::max(at_r, tail[static_cast<std::size_t>(i)]));
  }
  rep.asymptotically_flat = std::isfinite(rep.decay.back()) && rep.decay.back() < cfg.tol;
  return rep;
}

HyperbolicityStats hyperbolicity_stats(const SurfaceModel& m,
                                       std::span<const GeodesicState> thetas,
                                       std::span<const double> sample_times,
                                       const LinearizationConfig& cfg) {
  if (thetas.empty()) throw InvalidArgument("no base points");
  HyperbolicityStats st;
  for (const auto& th : thetas) st.bundles.push_back(green_bundle(m, th, cfg));
  const AngleDiagnostic ad = angle_diagnostic(st.bundles);
  st.min_angle_delta = ad.delta;
  st.D_check = ad.D_check;

  if (sample_times.empty()) return st;
  std::vector<double> sup_s(sample_times.size(), 0.0);
  std::vector<double> sup_u(sample_times.size(), 0.0);
  for (const auto& th : thetas) {
    const auto src = orbit_source(m, th, cfg);
    const auto ns = stable_frame_norms<1>(src, false, sample_times, cfg);
    const auto nu = stable_frame_norms<1>(src, true, sample_times, cfg);
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
      sup_s[i] = std::max(sup_s[i], ns[i]);
      sup_u[i] = std::max(sup_u[i], nu[i]);
    }
  }
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    st.stable_samples.emplace_back(sample_times[i], sup_s[i]);
    st.unstable_samples.emplace_back(sample_times[i], sup_u[i]);
  }
  try {
    st.stable = contraction_fit(st.stable_samples);
  } catch (const NotContractingError&) {
  }
  try {
    st.unstable = contraction_fit(st.unstable_samples);
  } catch (const NotContractingError&) {
  }
  return st;
}

}  // namespace warpflow
