#pragma once

// Averaged-curvature criterion and hyperbolicity statistics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "warpflow/geodesics.hpp"
#include "warpflow/linearization.hpp"
#include "warpflow/quadrature.hpp"
#include "warpflow/surfaces.hpp"

namespace warpflow {

struct AverageSeries {
  std::vector<double> t_grid;
  std::vector<double> avg;  // (1/t) int_0^t K(x(s)) ds
};

// (1/t) int_0^t K(x(s)) ds; t must lie in (0, horizon].
double average_curvature(const SurfaceModel& m, const CoordinatePath& path, double t);
double average_curvature(const SurfaceModel& m, const Trajectory& traj, double t);

// Averages on a grid of positive times, from one cumulative pass over the path.
AverageSeries average_series(const CoordinatePath& path,
                             const std::function<double(double)>& k,
                             std::span<const double> t_grid);
AverageSeries average_series(const SurfaceModel& m, const CoordinatePath& path,
                             std::span<const double> t_grid);

// Ricci average along gamma; in dimension 2 this is the curvature average.
double ricci_average(const SurfaceModel& m, const Trajectory& traj, double t);

// (1/t) int_0^t tr R(s) / (n - 1) ds.
template <int Dim>
double ricci_average(const CurvatureProfile<Dim>& profile, int dim, double t) {
  if (!(t > 0)) throw InvalidArgument("averaging time must be positive");
  const int panels = std::max(16, static_cast<int>(std::ceil(t / 0.05)));
  const double total = quadrature::composite(
      [&](double s) { return profile(s).trace() / dim; }, 0.0, t, panels);
  return total / t;
}

struct Floor {
  double floor = 0.0;   // max{eta/(16T), eta/(8T + 2A)}
  double t_star = 0.0;  // 4T + max{A + 4T, 2A}
  double eta = 0.0;
  double period = 0.0;
  double c1 = 0.0;
  double A = 0.0;       // (2/C1) log 3

  bool operator==(const Floor&) const = default;
};

// Lower bound on -(1/t) int K for every geodesic once t > t_star, for
// surfaces satisfying (A)-(C).
Floor theoretical_floor(const SurfaceModel& m, const ValidationConfig& cfg = {});

enum class Verdict { criterion_met, criterion_failed, inconclusive };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct ScanConfig {
  int n_geodesics = 64;
  std::uint64_t seed = 7;
  double t_final = 50.0;
  double t_step = 1.0;
  double min_B = 1e-3;
  int workers = 1;
  // The first sample is the meridian ray b0 = 1 from the window's left end.
  bool include_meridian = true;
  std::optional<Interval> window;  // defaults to the model's sample window
  IntegratorConfig integrator{};

  std::vector<double> t_grid() const;
};

struct GeodesicSummary {
  int index = 0;
  double x0 = 0.0;
  double b0 = 0.0;
  int sign = 1;
  bool ok = true;
  std::string error;
  double final_avg = 0.0;
  double max_avg_after_half = 0.0;  // max of avg over t >= t_final / 2

  bool operator==(const GeodesicSummary&) const = default;
};

struct ScanReport {
  int schema_version = 1;
  std::string model_label;
  int n_geodesics = 0;
  std::uint64_t seed = 0;
  double t_final = 0.0;
  double t_step = 0.0;
  double min_B = 0.0;
  Interval window{0.0, 0.0};
  std::optional<double> t_star;
  std::vector<std::pair<double, double>> sup_avg_at;  // (t, sup over geodesics)
  double B_estimate = 0.0;
  std::optional<double> t0_estimate;
  Verdict verdict = Verdict::inconclusive;
  std::vector<GeodesicSummary> geodesics;
  std::optional<Floor> floor;

  double final_sup() const { return sup_avg_at.back().second; }
  bool operator==(const ScanReport&) const = default;
};

// Samples (x0, b0, sign) with a seeded generator, integrates each geodesic
// (reduced system) and aggregates sup over geodesics of the running average.
// Results do not depend on cfg.workers.
ScanReport criterion_scan(const SurfaceModel& m, const ScanConfig& cfg);

// cos of the Sasaki angle between (1, u_s) and (1, u_u).
double sasaki_cos(double u_s, double u_u);

struct AngleDiagnostic {
  double delta = 0.0;     // minimum angle over the collection
  double D_bound = 0.0;   // (1 - cos delta)/(1 + cos delta)
  double min_sum = 0.0;   // min of u_s^2 + u_u^2
  bool D_check = false;
};

AngleDiagnostic angle_diagnostic(std::span<const BundleEstimate<1>> bundles);

struct ContractionFit {
  double C = 0.0;
  double lambda = 0.0;
  double r = 0.0;  // smallest sampled time with f(r) < 1
  double b = 0.0;  // f(r)
  double F = 0.0;  // max sampled value
  bool envelope_holds = false;
};

// Exponential envelope f(t) <= C lambda^t from samples (t, f(t)) of a
// submultiplicative function.
ContractionFit contraction_fit(std::span<const std::pair<double, double>> samples);

struct FlatnessConfig {
  double window = 1e3;  // sup is taken over |x - origin| <= window
  double step = 1e-2;
  double tol = 1e-4;
};

struct FlatnessReport {
  std::vector<double> radii;
  std::vector<double> decay;  // windowed sup of |K| outside each radius
  bool asymptotically_flat = false;
  double window = 0.0;
  double tol = 0.0;
};

FlatnessReport asymptotic_flatness(const SurfaceModel& m, double x_origin,
                                   std::span<const double> radii,
                                   const FlatnessConfig& cfg = {});

struct HyperbolicityStats {
  double min_angle_delta = 0.0;
  bool D_check = false;
  std::optional<ContractionFit> stable;
  std::optional<ContractionFit> unstable;
  std::vector<std::pair<double, double>> stable_samples;    // (t, sup ||Y_s(t)||)
  std::vector<std::pair<double, double>> unstable_samples;  // (t, sup ||Y_u(-t)||)
  std::vector<BundleEstimate<1>> bundles;
};

// Green bundles, angle check and contraction fits over a set of base points.
HyperbolicityStats hyperbolicity_stats(const SurfaceModel& m,
                                       std::span<const GeodesicState> thetas,
                                       std::span<const double> sample_times,
                                       const LinearizationConfig& cfg = {});

}  // namespace warpflow
