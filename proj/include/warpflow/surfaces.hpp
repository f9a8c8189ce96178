#pragma once

// Warped-product surfaces R x_f S^1 with metric dx^2 + f(x)^2 dy^2.

#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace warpflow {

using ScalarFunction = std::function<double(double)>;

struct Interval {
  double lo;
  double hi;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

// Positive constants with C1/2 < g' < C2/2, g = log f.
struct SlopeBounds {
  double c1;
  double c2;
};

// A warping function given either directly (f, f', f'') or through its
// logarithm g = log f (g, g', g''). Both views are always available; the
// native one is used wherever the other would overflow (f = e^{ax} for
// large x).
class SurfaceModel {
 public:
  static SurfaceModel from_warping(std::string label, ScalarFunction f,
                                   ScalarFunction df, ScalarFunction d2f);
  static SurfaceModel from_log_warping(std::string label, ScalarFunction g,
                                       ScalarFunction dg, ScalarFunction d2g);

  const std::string& label() const { return label_; }
  bool has_log_form() const { return log_native_; }

  double f(double x) const;
  double df(double x) const;
  double d2f(double x) const;
  // g = log f and its derivatives.
  double log_f(double x) const;
  double log_slope(double x) const;
  double log_slope_derivative(double x) const;

  // K = -f''/f evaluated through the native representation; may be non-finite.
  double raw_curvature(double x) const;
  double curvature_from_warping(double x) const;  // -f''/f
  double curvature_from_log(double x) const;      // -(g'' + g'^2)

  const std::optional<double>& period() const { return period_; }
  const std::optional<SlopeBounds>& slope_bounds() const { return slope_bounds_; }
  const std::optional<double>& curvature_bound() const { return curvature_bound_; }
  // Where f is positive, when that is not all of R.
  const std::optional<Interval>& domain() const { return domain_; }
  // Window used for sampling initial positions when there is no period.
  const Interval& sample_window() const { return sample_window_; }

  SurfaceModel& with_period(double T);
  SurfaceModel& with_slope_bounds(SlopeBounds b);
  SurfaceModel& with_curvature_bound(double c);
  SurfaceModel& with_domain(Interval d);
  SurfaceModel& with_sample_window(Interval w);

 private:
  SurfaceModel() = default;

  std::string label_;
  bool log_native_ = false;
  ScalarFunction e0_, e1_, e2_;  // f-triple or g-triple depending on log_native_
  std::optional<double> period_;
  std::optional<SlopeBounds> slope_bounds_;
  std::optional<double> curvature_bound_;
  std::optional<Interval> domain_;
  Interval sample_window_{-1.0, 1.0};
};

// Gaussian curvature K(x) = -f''(x)/f(x). Throws EvaluationError when the
// evaluators produce a non-finite value.
double curvature(const SurfaceModel& m, double x);

// g_a(x) = a x - cos x + sin x, f = e^{g_a}. Requires a > 2 sqrt 2.
SurfaceModel make_exp_family(double a);
// g(x) = e^{-x}: negative curvature, not Anosov.
SurfaceModel make_example2();
SurfaceModel make_flat();
// f = e^{rate x}, K = -rate^2.
SurfaceModel make_hyperbolic(double rate = 1.0);
// f = sqrt(1 + x^2), K = -1/(1 + x^2)^2.
SurfaceModel make_catenoid_like();
// f = cos x on |x| < pi/2, K = +1. Has conjugate points.
SurfaceModel make_spherical_band();

// Parses `name[:key=value,...]`, e.g. "exp_family:a=3", "hyperbolic:rate=2".
SurfaceModel parse_model(const std::string& spec);

// sqrt(max |K|) on a grid over `window`, inflated by 1%.
double estimate_curvature_bound(const SurfaceModel& m, Interval window,
                                double grid_step);

struct ValidationConfig {
  // Grid step; when unset, 1e-3 * T for periodic models, 1e-3 otherwise.
  std::optional<double> grid_step;
  double tol = 1e-9;
};

struct ConditionReport {
  bool condA_ok = false;
  bool condB_ok = false;
  bool condB_checkable = false;
  bool condC_ok = false;
  double measured_C1 = 0.0;  // 2 min g'
  double measured_C2 = 0.0;  // 2 max g'
  std::optional<double> eta;  // integral of K over one period
  double grid_resolution = 0.0;
  Interval window{0.0, 0.0};

  bool all_ok() const { return condA_ok && condB_ok && condC_ok; }
};

// Grid check of (A) g'' + g'^2 >= 0, (B) periodicity of K and (C) slope
// bounds, with eta by quadrature over one period when (B) holds.
ConditionReport validate_conditions(const SurfaceModel& m,
                                    const ValidationConfig& cfg = {});

}  // namespace warpflow
