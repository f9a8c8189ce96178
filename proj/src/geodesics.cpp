#include "warpflow/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "warpflow/errors.hpp"

namespace warpflow {

GeodesicState unit_state(const SurfaceModel& m, double x, double b, int sign, double y) {
  if (!(std::abs(b) <= 1.0)) throw InvalidArgument("|b| must not exceed 1");
  const double w = std::sqrt(std::max(0.0, 1.0 - b * b));
  const double vy = (sign >= 0 ? 1.0 : -1.0) * w * std::exp(-m.log_f(x));
  return {x, y, b, vy};
}

GeodesicState reversed(const GeodesicState& s) { return {s.x, s.y, -s.vx, -s.vy}; }

double speed_defect(const SurfaceModel& m, const GeodesicState& s) {
  const double w = s.vy * std::exp(m.log_f(s.x));
  return s.vx * s.vx + w * w - 1.0;
}

Christoffel christoffel(const SurfaceModel& m, double x) {
  const double g1 = m.log_slope(x);
  return {-std::exp(2 * m.log_f(x)) * g1, g1};
}

double CoordinatePath::hermite5(const Node& n0, const Node& n1, double t) {
  const double h = n1.t - n0.t;
  if (h == 0.0) return n0.x;
  const double u = (t - n0.t) / h;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  return n0.x * (1 - 10 * u3 + 15 * u4 - 6 * u5) +
         h * n0.dx * (u - 6 * u3 + 8 * u4 - 3 * u5) +
         h * h * n0.ddx * (0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5) +
         n1.x * (10 * u3 - 15 * u4 + 6 * u5) + h * n1.dx * (-4 * u3 + 7 * u4 - 3 * u5) +
         h * h * n1.ddx * (0.5 * u3 - u4 + 0.5 * u5);
}

std::size_t CoordinatePath::interval_of(double t) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                             [](double v, const Node& n) { return v < n.t; });
  std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, nodes_.size() - 2);
}

double CoordinatePath::value_at(double t) const {
  if (nodes_.empty()) throw InvalidArgument("empty path");
  if (nodes_.size() == 1) return nodes_.front().x;
  if (t < nodes_.front().t || t > nodes_.back().t) {
    throw InvalidArgument("time " + std::to_string(t) + " outside path horizon");
  }
  const std::size_t i = interval_of(t);
  return hermite5(nodes_[i], nodes_[i + 1], t);
}

double Trajectory::energy_drift() const {
  double worst = 0.0;
  for (double e : energy_) worst = std::max(worst, std::abs(e - 1.0));
  return worst;
}

double Trajectory::clairaut_drift() const {
  const double c0 = clairaut_.front();
  const double scale = std::max(1.0, std::abs(c0));
  double worst = 0.0;
  for (double c : clairaut_) worst = std::max(worst, std::abs(c - c0) / scale);
  return worst;
}

GeodesicState Trajectory::state_at(double t, const SurfaceModel& m) const {
  const auto nodes = path_.nodes();
  if (t < nodes.front().t || t > nodes.back().t) {
    throw InvalidArgument("time " + std::to_string(t) + " outside trajectory horizon");
  }
  const double x = path_.value_at(t);
  const double y = y_path_.value_at(t);
  // x' and log|f y'| by cubic Hermite; their derivatives are known at nodes.
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  i = i == 0 ? 0 : std::min(i - 1, times_.size() - 2);
  if (times_.size() == 1) return states_.front();
  const double h = times_[i + 1] - times_[i];
  const double u = (t - times_[i]) / h;
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
  const auto& f0 = frames_[i];
  const auto& f1 = frames_[i + 1];
  const auto& p0 = path_.nodes()[i];
  const auto& p1 = path_.nodes()[i + 1];
  const double g0 = m.log_slope(p0.x), g1 = m.log_slope(p1.x);
  const double vx = h00 * f0.vx + h * h10 * p0.ddx + h01 * f1.vx + h * h11 * p1.ddx;
  const double lw = h00 * f0.log_w + h * h10 * (-g0 * f0.vx) + h01 * f1.log_w +
                    h * h11 * (-g1 * f1.vx);
  return {x, y, vx, sign_ * std::exp(lw - m.log_f(x))};
}

namespace {

bool near_unit(double b) { return std::abs(b) >= 1.0 - 1e-12; }

void check_start(const SurfaceModel& m, const GeodesicState& s0, double t_end) {
  if (!(t_end > 0)) throw InvalidArgument("t_end must be positive");
  if (!std::isfinite(s0.x) || !std::isfinite(s0.vx) || !std::isfinite(s0.vy)) {
    throw InvalidArgument("initial state must be finite");
  }
  if (std::abs(speed_defect(m, s0)) > 1e-9) {
    throw InvalidArgument("initial state is not unit speed");
  }
  if (m.domain() && !m.domain()->contains(s0.x)) {
    throw InvalidArgument("initial position outside the model domain");
  }
}

}  // namespace

Trajectory integrate(const SurfaceModel& m, const GeodesicState& s0, double t_end,
                     const IntegratorConfig& cfg) {
  check_start(m, s0, t_end);
  Trajectory traj;
  traj.sign_ = s0.vy >= 0 ? 1 : -1;
  const int sign = traj.sign_;

  auto record = [&](double t, double x, double y, double vx, double log_w) {
    const double g = m.log_f(x);
    const double g1 = m.log_slope(x);
    const double w = std::exp(log_w);
    traj.times_.push_back(t);
    traj.states_.push_back({x, y, vx, sign * std::exp(log_w - g)});
    traj.curvature_.push_back(curvature(m, x));
    traj.clairaut_.push_back(log_w == -std::numeric_limits<double>::infinity()
                                 ? 0.0
                                 : sign * std::exp(g + log_w));
    traj.energy_.push_back(vx * vx + w * w);
    traj.frames_.push_back({vx, log_w});
    traj.path_.push({t, x, vx, g1 * w * w});
    const double dy = sign * std::exp(log_w - g);
    traj.y_path_.push({t, y, dy, -2 * g1 * vx * dy});
  };

  auto capped = [&](double x) {
    return cfg.curvature_cap && std::abs(m.raw_curvature(x)) > *cfg.curvature_cap;
  };

  if (s0.vy == 0.0) {
    // Meridian: x' = +-1 is an exact solution.
    const double dir = s0.vx > 0 ? 1.0 : -1.0;
    const double lw = -std::numeric_limits<double>::infinity();
    const double dt = cfg.tol.max_step;
    const long n = static_cast<long>(std::ceil(t_end / dt));
    for (long i = 0; i <= n; ++i) {
      const double t = std::min(i * dt, t_end);
      const double x = s0.x + dir * t;
      if (m.domain() && !m.domain()->contains(x)) {
        throw IntegrationError("orbit left the model domain", t);
      }
      if (i > 0 && capped(x)) {
        traj.truncated_ = true;
        break;
      }
      record(t, x, s0.y, dir, lw);
    }
    return traj;
  }

  using State = Eigen::Vector4d;  // x, y, vx, log|f vy|
  const double w0 = std::abs(s0.vy) * std::exp(m.log_f(s0.x));
  State y0(s0.x, s0.y, s0.vx, std::log(w0));
  auto rhs = [&m, sign](double, const State& s) -> State {
    const double g = m.log_f(s[0]);
    const double g1 = m.log_slope(s[0]);
    const double w = std::exp(s[3]);
    return State(s[2], sign * std::exp(s[3] - g), g1 * w * w, -g1 * s[2]);
  };
  record(0.0, y0[0], y0[1], y0[2], y0[3]);
  auto integrator = ode::make_integrator<State>(rhs, 0.0, y0, cfg.tol);
  integrator.advance_to(t_end, [&](double t, State& s, const State&) {
    auto action = ode::StepAction::proceed;
    if (cfg.renormalize) {
      const double w = std::exp(s[3]);
      const double norm = std::sqrt(s[2] * s[2] + w * w);
      if (norm != 1.0) {
        s[2] /= norm;
        s[3] -= std::log(norm);
        action = ode::StepAction::modified;
      }
    }
    if (m.domain() && !m.domain()->contains(s[0])) {
      throw IntegrationError("orbit left the model domain", t);
    }
    if (capped(s[0])) {
      traj.truncated_ = true;
      return ode::StepAction::stop;
    }
    record(t, s[0], s[1], s[2], s[3]);
    return action;
  });
  return traj;
}

ReducedOrbit integrate_reduced(const SurfaceModel& m, double x0, double b0,
                               double t_end, const IntegratorConfig& cfg,
                               std::span<const double> output_times) {
  if (!(std::abs(b0) <= 1.0)) throw InvalidArgument("|b0| must not exceed 1");
  if (!(t_end > 0)) throw InvalidArgument("t_end must be positive");
  ReducedOrbit orbit;
  auto capped = [&](double x) {
    return cfg.curvature_cap && std::abs(m.raw_curvature(x)) > *cfg.curvature_cap;
  };

  std::vector<double> stops;
  for (double t : output_times) {
    if (t > 0 && t < t_end) stops.push_back(t);
  }
  std::sort(stops.begin(), stops.end());
  stops.push_back(t_end);

  if (near_unit(b0)) {
    orbit.exact_line = true;
    const double dir = b0 > 0 ? 1.0 : -1.0;
    const double inf = std::numeric_limits<double>::infinity();
    auto push = [&](double t) {
      const double x = x0 + dir * t;
      orbit.times.push_back(t);
      orbit.x.push_back(x);
      orbit.b.push_back(dir);
      orbit.rapidity.push_back(dir * inf);
      orbit.path.push({t, x, dir, 0.0});
    };
    push(0.0);
    double t = 0.0;
    for (double stop : stops) {
      while (t < stop) {
        t = std::min(t + cfg.tol.max_step, stop);
        if (capped(x0 + dir * t)) {
          orbit.truncated = true;
          return orbit;
        }
        push(t);
      }
    }
    return orbit;
  }

  using State = Eigen::Vector2d;  // x, rapidity
  auto rhs = [&m](double, const State& s) -> State {
    return State(std::tanh(s[1]), m.log_slope(s[0]));
  };
  auto push = [&](double t, const State& s) {
    const double b = std::tanh(s[1]);
    const double sech2 = 1.0 - b * b;
    orbit.times.push_back(t);
    orbit.x.push_back(s[0]);
    orbit.b.push_back(b);
    orbit.rapidity.push_back(s[1]);
    orbit.path.push({t, s[0], b, m.log_slope(s[0]) * sech2});
  };
  State y0(x0, std::atanh(b0));
  push(0.0, y0);
  auto integrator = ode::make_integrator<State>(rhs, 0.0, y0, cfg.tol);
  for (double stop : stops) {
    const bool done = integrator.advance_to(stop, [&](double t, State& s, const State&) {
      if (capped(s[0])) {
        orbit.truncated = true;
        return ode::StepAction::stop;
      }
      push(t, s);
      return ode::StepAction::proceed;
    });
    if (!done) break;
  }
  return orbit;
}

EnvelopeCheck envelope_check(const SurfaceModel& m, double x0, double b0,
                             std::span<const double> t_grid, const IntegratorConfig& cfg,
                             std::optional<SlopeBounds> bounds) {
  if (!bounds) bounds = m.slope_bounds();
  if (!bounds) {
    throw NotApplicable("envelope check needs slope bounds (C1, C2) on model " + m.label());
  }
  if (!(std::abs(b0) < 1.0)) throw InvalidArgument("envelope check needs |b0| < 1");
  if (t_grid.empty()) throw InvalidArgument("empty time grid");
  const double t_end = *std::max_element(t_grid.begin(), t_grid.end());
  EnvelopeCheck out;
  out.B0 = (1 + b0) / (1 - b0);
  const double z0 = std::atanh(b0);

  ReducedOrbit orbit;
  if (t_end > 0) orbit = integrate_reduced(m, x0, b0, t_end, cfg, t_grid);
  if (orbit.exact_line) {
    // Snapping only happens for |b0| within 1e-12 of 1.
    throw InvalidArgument("envelope check needs |b0| < 1 - 1e-12");
  }

  out.inside = true;
  out.min_margin = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    double z = z0;
    if (t > 0) {
      auto it = std::lower_bound(orbit.times.begin(), orbit.times.end(), t);
      if (it == orbit.times.end() || *it != t) {
        throw IntegrationError("reduced orbit stopped before grid time", orbit.times.back());
      }
      z = orbit.rapidity[static_cast<std::size_t>(it - orbit.times.begin())];
    }
    EnvelopeSample s;
    s.t = t;
    s.b = std::tanh(z);
    s.lower = 1 - 2 / (out.B0 * std::exp(bounds->c1 * t) + 1);
    s.upper = 1 - 2 / (out.B0 * std::exp(bounds->c2 * t) + 1);
    s.gain = 2 * (z - z0);
    out.samples.push_back(s);
    if (t > 0) {
      const double margin = std::min(s.gain - bounds->c1 * t, bounds->c2 * t - s.gain);
      out.min_margin = std::min(out.min_margin, margin);
      if (!(margin > 0)) out.inside = false;
    }
  }
  return out;
}

}  // namespace warpflow
