#pragma once

// Linearised geodesic flow: matrix Jacobi equation Y'' + R(t) Y = 0, its
// Riccati reduction U' + U^2 + R = 0, and the stable/unstable Green bundles
// obtained as limits of boundary-value solutions.
//
// Everything is templated on the compile-time dimension of the normal space:
// Dim = 1 is the surface case, Eigen::Dynamic covers general n - 1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "warpflow/errors.hpp"
#include "warpflow/geodesics.hpp"
#include "warpflow/ode.hpp"
#include "warpflow/surfaces.hpp"

namespace warpflow {

template <int Dim>
using Square = Eigen::Matrix<double, Dim, Dim>;

template <int Dim>
using CurvatureProfile = std::function<Square<Dim>(double)>;

struct LinearizationConfig {
  ode::Tolerances tol{1e-11, 1e-11, 0.25, 1e-14, 200'000'000};
  // Y and Y' are divided by ||Y|| (max-abs) once it exceeds this.
  double rescale_threshold = 1e15;
  double blowup_threshold = 1e6;
  double bundle_tol = 1e-8;
  double r0 = 8.0;
  double r_cap = 8192.0;
  // Orbit integration stops where |K| exceeds this; see OrbitSource.
  double curvature_cap = 1e6;
  IntegratorConfig orbit{};
  // Extra horizon beyond the last sample used by the stable-frame solver.
  double stable_margin = 30.0;
};

// Y(t), Y'(t) with the common factor e^{log_scale} split off.
template <int Dim>
struct JacobiFrame {
  Square<Dim> Y;
  Square<Dim> Yp;
  double t = 0.0;
  double log_scale = 0.0;

  double log_abs_det() const {
    return std::log(std::abs(Y.determinant())) + Y.rows() * log_scale;
  }
  Square<Dim> riccati() const { return Yp * Y.inverse(); }
};

template <int Dim>
struct RiccatiState {
  Square<Dim> u;
  double t = 0.0;
  bool blown_up = false;
  std::optional<double> blowup_time;
};

template <int Dim>
struct BundleEstimate {
  Square<Dim> u_s;
  Square<Dim> u_u;
  double r_used = 0.0;
  double residual = 0.0;
  double residual_s = 0.0;
  double residual_u = 0.0;
  std::vector<double> history_s;  // ||U_r - U_{2r}|| along the doubling
  std::vector<double> history_u;
  bool converged = false;
  bool truncated = false;  // an orbit hit the curvature cap
  std::optional<GeodesicState> theta;
};

template <int Dim>
class BundleConvergenceError : public Error {
 public:
  explicit BundleConvergenceError(BundleEstimate<Dim> est)
      : Error("Green bundle did not converge at |r| = " + std::to_string(est.r_used) +
              " (residual " + std::to_string(est.residual) + ")"),
        estimate_(std::move(est)) {}
  const BundleEstimate<Dim>& estimate() const { return estimate_; }

 private:
  BundleEstimate<Dim> estimate_;
};

// Curvature along an orbit, on demand. `extend(h, reversed)` returns R(tau)
// for tau in [0, reached] along the orbit (or the time-reversed orbit) and
// the horizon actually reached, which is below h when the orbit runs into
// the curvature cap.
template <int Dim>
struct OrbitSource {
  int dim = 1;
  std::function<std::pair<CurvatureProfile<Dim>, double>(double, bool)> extend;
  std::optional<GeodesicState> theta;
};

namespace detail {

constexpr int stacked(int d) {
  return d == Eigen::Dynamic ? Eigen::Dynamic : 2 * d;
}

template <int Dim, int Cols>
using Block = Eigen::Matrix<double, stacked(Dim), Cols>;

// [Y; Y']' = [Y'; -R Y]
template <int Dim, int Cols>
auto jacobi_rhs(std::shared_ptr<CurvatureProfile<Dim>> profile, int d) {
  return [profile, d](double t, const Block<Dim, Cols>& s) -> Block<Dim, Cols> {
    Block<Dim, Cols> out(2 * d, s.cols());
    out.topRows(d) = s.bottomRows(d);
    out.bottomRows(d).noalias() = -(*profile)(t) * s.topRows(d);
    return out;
  };
}

template <int Dim, int Cols>
double rescale(Block<Dim, Cols>& s, int d, double threshold) {
  const double big = s.topRows(d).cwiseAbs().maxCoeff();
  if (!(big > threshold)) return 0.0;
  s /= big;
  return std::log(big);
}

template <int Dim>
double op_norm(const Square<Dim>& a) {
  if (a.rows() == 1) return std::abs(a(0, 0));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

struct SideResult {
  double r = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  bool converged = false;
  bool truncated = false;
};

// U_r = Y'_{r}(0) Y_r(0)^{-1} for the solution with Y(0) = I, Y(r) = 0,
// r = r0, 2 r0, ... along the (possibly reversed) orbit. Y_r = A - B B(r)^{-1}
// A(r) with A, B the fundamental solutions from (I, 0) and (0, I).
template <int Dim>
std::pair<Square<Dim>, SideResult> forward_limit(const OrbitSource<Dim>& source,
                                                 bool reversed,
                                                 const LinearizationConfig& cfg) {
  using State = Block<Dim, Dim == Eigen::Dynamic ? Eigen::Dynamic : 2 * Dim>;
  const int d = source.dim;
  auto profile = std::make_shared<CurvatureProfile<Dim>>();
  State s0 = State::Zero(2 * d, 2 * d);
  s0.topLeftCorner(d, d).setIdentity();
  s0.bottomRightCorner(d, d).setIdentity();

  SideResult side;
  double reached = 0.0;
  double r = cfg.r0;
  std::tie(*profile, reached) = source.extend(r, reversed);
  if (reached < r) {
    side.truncated = true;
    r = reached;
  }
  auto integrator =
      ode::make_integrator<State>(jacobi_rhs<Dim, State::ColsAtCompileTime>(profile, d),
                                  0.0, s0, cfg.tol);

  auto det_b = [d](const State& s) { return s.block(0, d, d, d).determinant(); };
  double prev_det = 0.0;
  auto observer = [&](double t, State& s, const State&) {
    const double det = det_b(s);
    if (prev_det != 0.0 && (det == 0.0 || (det > 0) != (prev_det > 0))) {
      // Refine the sign change of det B inside the last step.
      double lo = 0.0, hi = t - integrator.previous_time();
      for (int it = 0; it < 80 && std::abs(hi - lo) > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = det_b(integrator.trial_from_previous(mid));
        if ((dm > 0) == (prev_det > 0) && dm != 0.0) lo = mid; else hi = mid;
      }
      throw ConjugatePointError(integrator.previous_time() + 0.5 * (lo + hi));
    }
    prev_det = det;
    return rescale<Dim, State::ColsAtCompileTime>(s, d, cfg.rescale_threshold) != 0.0
               ? ode::StepAction::modified
               : ode::StepAction::proceed;
  };

  auto value_at_end = [&]() -> Square<Dim> {
    const State& s = integrator.state();
    const Square<Dim> A = s.block(0, 0, d, d);
    const Square<Dim> B = s.block(0, d, d, d);
    return -B.partialPivLu().solve(A);
  };

  integrator.advance_to(r, observer);
  Square<Dim> current = value_at_end();
  side.r = r;
  if (side.truncated) return {current, side};

  while (true) {
    double next = 2 * r;
    if (next > cfg.r_cap) return {current, side};
    std::tie(*profile, reached) = source.extend(next, reversed);
    if (reached < next) {
      side.truncated = true;
      next = reached;
    }
    // The refreshed profile agrees with the old one on [0, r].
    integrator.reset_state(integrator.state());
    integrator.advance_to(next, observer);
    const Square<Dim> value = value_at_end();
    side.residual = (value - current).norm();
    side.history.push_back(side.residual);
    current = value;
    side.r = next;
    r = next;
    if (side.residual < cfg.bundle_tol) {
      side.converged = true;
      return {current, side};
    }
    if (side.truncated) return {current, side};
  }
}

}  // namespace detail

// Frames at each of `times` (monotone; times.front() is the start) for the
// solution with Y(times.front()) = Y0, Y'(times.front()) = Yp0.
template <int Dim>
std::vector<JacobiFrame<Dim>> propagate_jacobi(const CurvatureProfile<Dim>& profile,
                                               const Square<Dim>& Y0,
                                               const Square<Dim>& Yp0,
                                               std::span<const double> times,
                                               const LinearizationConfig& cfg = {}) {
  if (Y0.rows() != Y0.cols() || Yp0.rows() != Y0.rows() || Yp0.cols() != Y0.cols()) {
    throw InvalidArgument("Jacobi data must be square matrices of matching dimension");
  }
  if (times.empty()) throw InvalidArgument("no sample times");
  using State = detail::Block<Dim, Dim>;
  const int d = static_cast<int>(Y0.rows());
  auto shared = std::make_shared<CurvatureProfile<Dim>>(profile);
  State s0(2 * d, d);
  s0.topRows(d) = Y0;
  s0.bottomRows(d) = Yp0;
  auto integrator = ode::make_integrator<State>(detail::jacobi_rhs<Dim, Dim>(shared, d),
                                                times.front(), s0, cfg.tol);
  double log_scale = 0.0;
  std::vector<JacobiFrame<Dim>> frames;
  frames.reserve(times.size());
  for (double t : times) {
    integrator.advance_to(t, [&](double, State& s, const State&) {
      const double grew = detail::rescale<Dim, Dim>(s, d, cfg.rescale_threshold);
      log_scale += grew;
      return grew != 0.0 ? ode::StepAction::modified : ode::StepAction::proceed;
    });
    const State& s = integrator.state();
    frames.push_back({s.topRows(d), s.bottomRows(d), t, log_scale});
  }
  return frames;
}

// Integrates u' = -u^2 - R(t) through `times`. Once max|u| passes the
// blow-up threshold the crossing time is located by bisection inside the
// last step, a final blown-up state is appended and the series ends.
template <int Dim>
std::vector<RiccatiState<Dim>> riccati_flow(const CurvatureProfile<Dim>& profile,
                                            const Square<Dim>& u0,
                                            std::span<const double> times,
                                            const LinearizationConfig& cfg = {}) {
  if (times.empty()) throw InvalidArgument("no sample times");
  using State = Square<Dim>;
  auto rhs = [&profile](double t, const State& u) -> State {
    return -(u * u) - profile(t);
  };
  auto integrator = ode::make_integrator<State>(rhs, times.front(), u0, cfg.tol);
  const double limit = cfg.blowup_threshold;
  std::vector<RiccatiState<Dim>> out;
  std::optional<RiccatiState<Dim>> blowup;

  auto locate = [&](double t_hit) {
    double lo = 0.0, hi = t_hit - integrator.previous_time();
    for (int it = 0; it < 100 && std::abs(hi - lo) > 1e-14; ++it) {
      const double mid = 0.5 * (lo + hi);
      const State u = integrator.trial_from_previous(mid);
      if (u.allFinite() && u.cwiseAbs().maxCoeff() < limit) lo = mid; else hi = mid;
    }
    const double tb = integrator.previous_time() + 0.5 * (lo + hi);
    blowup = RiccatiState<Dim>{integrator.trial_from_previous(0.5 * (lo + hi)), tb, true, tb};
  };

  for (double t : times) {
    bool ok = true;
    try {
      ok = integrator.advance_to(t, [&](double tc, State& u, const State&) {
        if (u.cwiseAbs().maxCoeff() > limit) {
          locate(tc);
          return ode::StepAction::stop;
        }
        return ode::StepAction::proceed;
      });
    } catch (const IntegrationError& e) {
      // Step size collapsed while approaching a pole.
      const State& u = integrator.state();
      if (u.cwiseAbs().maxCoeff() < std::sqrt(limit)) throw;
      const double tb = integrator.time();
      blowup = RiccatiState<Dim>{u, tb, true, tb};
      ok = false;
    }
    if (!ok) break;
    out.push_back({integrator.state(), t, false, std::nullopt});
  }
  if (blowup) out.push_back(*blowup);
  return out;
}

// Stable and unstable Green bundles at the orbit's base point.
template <int Dim>
BundleEstimate<Dim> green_bundle(const OrbitSource<Dim>& source,
                                 const LinearizationConfig& cfg = {}) {
  auto [us, side_s] = detail::forward_limit<Dim>(source, false, cfg);
  auto [ur, side_u] = detail::forward_limit<Dim>(source, true, cfg);
  BundleEstimate<Dim> est;
  est.u_s = us;
  // Y_{theta,r}(t) for r < 0 is the reversed-orbit solution run backwards,
  // which flips the sign of Y'(0).
  est.u_u = -ur;
  est.residual_s = side_s.residual;
  est.residual_u = side_u.residual;
  est.residual = std::max(side_s.residual, side_u.residual);
  est.r_used = std::max(side_s.r, side_u.r);
  est.history_s = std::move(side_s.history);
  est.history_u = std::move(side_u.history);
  est.converged = side_s.converged && side_u.converged;
  est.truncated = side_s.truncated || side_u.truncated;
  est.theta = source.theta;
  if (!est.converged) throw BundleConvergenceError<Dim>(est);
  return est;
}

// ||Y_s(t)|| for the stable Green frame (Y_s(0) = I) at each of `times`
// (t >= 0). Solved backwards from Y(R) = 0 with R = max t + margin, which is
// the numerically stable direction for a decaying solution.
template <int Dim>
std::vector<double> stable_frame_norms(const OrbitSource<Dim>& source, bool reversed,
                                       std::span<const double> times,
                                       const LinearizationConfig& cfg = {}) {
  if (times.empty()) throw InvalidArgument("no sample times");
  const double t_max = *std::max_element(times.begin(), times.end());
  auto [profile, reached] = source.extend(t_max + cfg.stable_margin, reversed);
  if (reached < t_max) {
    throw IntegrationError("orbit ended before the last sample time", reached);
  }
  const int d = source.dim;
  std::vector<double> grid(times.begin(), times.end());
  grid.push_back(0.0);
  grid.push_back(reached);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto frames = propagate_jacobi<Dim>(profile, Square<Dim>::Zero(d, d),
                                            -Square<Dim>::Identity(d, d), grid, cfg);
  const auto& at_zero = frames.back();
  const Square<Dim> inv0 = at_zero.Y.inverse();
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const auto it = std::find_if(frames.begin(), frames.end(),
                                 [t](const auto& f) { return f.t == t; });
    const double scale = std::exp(it->log_scale - at_zero.log_scale);
    out.push_back(scale * detail::op_norm<Dim>(it->Y * inv0));
  }
  return out;
}

// max |d/dt log|det Y| - tr u| over interior samples, by centered differences.
template <int Dim>
double liouville_residual(std::span<const JacobiFrame<Dim>> frames,
                          std::span<const RiccatiState<Dim>> riccati) {
  const std::size_t n = std::min(frames.size(), riccati.size());
  if (n < 3) throw InvalidArgument("need at least three samples");
  std::vector<double> logdet(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(frames[i].t - riccati[i].t) > 1e-12) {
      throw InvalidArgument("frame and Riccati series use different time grids");
    }
    logdet[i] = frames[i].log_abs_det();
    if (!std::isfinite(logdet[i])) throw SingularFrameError(frames[i].t);
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (riccati[i + 1].blown_up) break;
    const double slope =
        (logdet[i + 1] - logdet[i - 1]) / (frames[i + 1].t - frames[i - 1].t);
    worst = std::max(worst, std::abs(slope - riccati[i].u.trace()));
  }
  return worst;
}

// Least-squares slope of log|det Y(t)| over [t_a, t_b].
template <int Dim>
double det_exponent(std::span<const JacobiFrame<Dim>> frames, double t_a, double t_b) {
  if (!(t_b > t_a) || t_a < 0) throw InvalidArgument("fit window needs 0 <= t_a < t_b");
  double n = 0, st = 0, sl = 0, stt = 0, stl = 0;
  for (const auto& f : frames) {
    if (f.t < t_a || f.t > t_b) continue;
    const double l = f.log_abs_det();
    if (!std::isfinite(l)) throw SingularFrameError(f.t);
    n += 1;
    st += f.t;
    sl += l;
    stt += f.t * f.t;
    stl += f.t * l;
  }
  if (n < 4) throw InvalidArgument("fewer than 4 samples in the fit window");
  return (n * stl - st * sl) / (n * stt - st * st);
}

template <int Dim>
bool check_bundle_bound(const BundleEstimate<Dim>& est, double c, double tol = 1e-9) {
  return detail::op_norm<Dim>(est.u_s) <= c + tol && detail::op_norm<Dim>(est.u_u) <= c + tol;
}

// Orbit source for a time-dependent R(t) defined on all of R.
template <int Dim>
OrbitSource<Dim> profile_source(CurvatureProfile<Dim> R, int dim) {
  OrbitSource<Dim> src;
  src.dim = dim;
  src.extend = [R = std::move(R)](double h, bool rev) {
    CurvatureProfile<Dim> p = rev ? CurvatureProfile<Dim>([R](double t) { return R(-t); })
                                  : R;
    return std::pair<CurvatureProfile<Dim>, double>(std::move(p), h);
  };
  return src;
}

template <int Dim>
OrbitSource<Dim> constant_source(const Square<Dim>& R) {
  return profile_source<Dim>([R](double) { return R; }, static_cast<int>(R.rows()));
}

// --- Surface (n = 2) entry points ------------------------------------------

// R(t) = K(x(t)) along a trajectory.
CurvatureProfile<1> trajectory_profile(const SurfaceModel& m,
                                       std::shared_ptr<const Trajectory> traj);

// Geodesic from theta, integrated on demand up to the requested horizon or
// until |K| exceeds cfg.curvature_cap.
OrbitSource<1> orbit_source(const SurfaceModel& m, const GeodesicState& theta,
                            const LinearizationConfig& cfg = {});

// Frames on `times` (default: the trajectory's own nodes).
std::vector<JacobiFrame<1>> propagate_jacobi(const SurfaceModel& m,
                                             const Trajectory& traj, double Y0,
                                             double Yp0,
                                             std::span<const double> times = {},
                                             const LinearizationConfig& cfg = {});

std::vector<RiccatiState<1>> riccati_flow(const SurfaceModel& m, const Trajectory& traj,
                                          double u0, std::span<const double> times = {},
                                          const LinearizationConfig& cfg = {});

BundleEstimate<1> green_bundle(const SurfaceModel& m, const GeodesicState& theta,
                               const LinearizationConfig& cfg = {});

// Uniform grid t0, t0 + dt, ..., t1 (t1 included).
std::vector<double> uniform_grid(double t0, double t1, double dt);

}  // namespace warpflow
