#pragma once

// Unit-speed geodesics on warped products, full and reduced.

#include <optional>
#include <span>
#include <vector>

#include "warpflow/ode.hpp"
#include "warpflow/quadrature.hpp"
#include "warpflow/surfaces.hpp"

namespace warpflow {

// Phase point (x, y, x', y'); y is unwrapped.
struct GeodesicState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

// Unit-speed state with x' = b and sign(y') = sign.
GeodesicState unit_state(const SurfaceModel& m, double x, double b, int sign = 1,
                         double y = 0.0);
GeodesicState reversed(const GeodesicState& s);
// vx^2 + f^2 vy^2 - 1.
double speed_defect(const SurfaceModel& m, const GeodesicState& s);

struct Christoffel {
  double gamma1_22;  // -f f'
  double gamma2_12;  // f'/f
};
Christoffel christoffel(const SurfaceModel& m, double x);

struct IntegratorConfig {
  ode::Tolerances tol;
  double drift_tol = 1e-8;
  bool renormalize = true;
  // Stop once |K(x)| exceeds this; the trajectory is then marked truncated.
  std::optional<double> curvature_cap;
};

// x(t) along an orbit sampled at integration nodes, with quintic Hermite
// interpolation from (x, x', x'') at both ends of each interval.
class CoordinatePath {
 public:
  struct Node {
    double t;
    double x;
    double dx;
    double ddx;
  };

  void push(const Node& n) { nodes_.push_back(n); }
  std::span<const Node> nodes() const { return nodes_; }
  double horizon() const { return nodes_.empty() ? 0.0 : nodes_.back().t; }
  double value_at(double t) const;

  static double hermite5(const Node& n0, const Node& n1, double t);

  // Integral of fn(x(s)) over [0, t] (t within the horizon), five-point
  // Gauss-Legendre on every node interval.
  template <class F>
  double integrate(F&& fn, double t) const;

 private:
  std::size_t interval_of(double t) const;
  std::vector<Node> nodes_;
};

class Trajectory {
 public:
  const std::vector<double>& times() const { return times_; }
  const std::vector<GeodesicState>& states() const { return states_; }
  const std::vector<double>& curvature_samples() const { return curvature_; }
  // f(x)^2 y' along the orbit, computed as sign * exp(log f + log|f y'|).
  const std::vector<double>& clairaut() const { return clairaut_; }
  double clairaut0() const { return clairaut_.front(); }
  const CoordinatePath& path() const { return path_; }
  double horizon() const { return path_.horizon(); }
  bool truncated() const { return truncated_; }

  // max |vx^2 + (f vy)^2 - 1| over samples.
  double energy_drift() const;
  // max |c(t) - c0| / max(1, |c0|).
  double clairaut_drift() const;
  // Interpolated phase point.
  GeodesicState state_at(double t, const SurfaceModel& m) const;

 private:
  friend Trajectory integrate(const SurfaceModel&, const GeodesicState&, double,
                              const IntegratorConfig&);
  struct FrameNode {
    double vx;
    double log_w;  // log |f vy|
  };
  std::vector<double> times_;
  std::vector<GeodesicState> states_;
  std::vector<double> curvature_;
  std::vector<double> clairaut_;
  std::vector<double> energy_;
  std::vector<FrameNode> frames_;
  CoordinatePath path_;
  CoordinatePath y_path_;
  int sign_ = 1;
  bool truncated_ = false;
};

// Full geodesic system x'' = f f' y'^2, y'' = -2 (f'/f) x' y'. Integrated in
// the orthonormal frame (x, y, x', log|f y'|); the velocity is rescaled onto
// the unit sphere after every accepted step.
Trajectory integrate(const SurfaceModel& m, const GeodesicState& s0, double t_end,
                     const IntegratorConfig& cfg = {});

struct ReducedOrbit {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> b;         // x'(t)
  std::vector<double> rapidity;  // atanh b; +-inf on the exact-line branch
  CoordinatePath path;
  bool exact_line = false;
  bool truncated = false;
};

// Reduced system x'' = g'(x)(1 - x'^2), integrated as x' = tanh z, z' = g'(x).
// |b0| within 1e-12 of 1 takes the exact line x0 +- t. Nodes include every
// entry of output_times inside (0, t_end].
ReducedOrbit integrate_reduced(const SurfaceModel& m, double x0, double b0,
                               double t_end, const IntegratorConfig& cfg = {},
                               std::span<const double> output_times = {});

struct EnvelopeSample {
  double t;
  double b;
  double lower;  // 1 - 2/(B0 e^{C1 t} + 1)
  double upper;  // 1 - 2/(B0 e^{C2 t} + 1)
  double gain;   // log((1+b)/(1-b)) - log B0 = 2 (z(t) - z(0))
};

struct EnvelopeCheck {
  bool inside = false;
  // min over t > 0 of min(gain - C1 t, C2 t - gain).
  double min_margin = 0.0;
  double B0 = 0.0;
  std::vector<EnvelopeSample> samples;
};

// Two-sided bound on b(t) implied by C1/2 < g' < C2/2. Strictness is checked
// in the equivalent log form C1 t < gain < C2 t at every grid time t > 0.
EnvelopeCheck envelope_check(const SurfaceModel& m, double x0, double b0,
                             std::span<const double> t_grid,
                             const IntegratorConfig& cfg = {},
                             std::optional<SlopeBounds> bounds = std::nullopt);

template <class F>
double CoordinatePath::integrate(F&& fn, double t) const {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double a = nodes_[i].t;
    if (a >= t) break;
    const double b = std::min(nodes_[i + 1].t, t);
    const Node& n0 = nodes_[i];
    const Node& n1 = nodes_[i + 1];
    sum += quadrature::gauss_legendre5([&](double s) { return fn(hermite5(n0, n1, s)); }, a, b);
  }
  return sum;
}

}  // namespace warpflow
