#pragma once

// Adaptive Dormand-Prince 5(4) integration for Eigen dense states.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "warpflow/errors.hpp"

namespace warpflow::ode {

struct Tolerances {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double max_step = 0.25;
  double min_step = 1e-13;
  long max_steps = 200'000'000;
};

// What an observer wants after an accepted step. `modified` means the
// observer rewrote the state in place and the cached derivative is stale.
enum class StepAction { proceed, modified, stop };

namespace detail {

// Butcher tableau of Dormand & Prince (1980).
struct DP54 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

// Integrates dy/dt = rhs(t, y) for an Eigen dense State. The integrator keeps
// its position between calls, so a caller can land exactly on a sequence of
// output times by calling advance_to repeatedly.
template <class State, class Rhs>
class AdaptiveIntegrator {
 public:
  AdaptiveIntegrator(Rhs rhs, double t0, State y0, Tolerances tol = {})
      : rhs_(std::move(rhs)), tol_(tol), t_(t0), y_(std::move(y0)) {
    dydt_ = rhs_(t_, y_);
    prev_t_ = t_;
    prev_y_ = y_;
    prev_dydt_ = dydt_;
  }

  double time() const { return t_; }
  const State& state() const { return y_; }
  const State& derivative() const { return dydt_; }
  long steps() const { return n_steps_; }

  // Last accepted step's starting point; used for bisection inside a step.
  double previous_time() const { return prev_t_; }
  const State& previous_state() const { return prev_y_; }

  // Overwrites the current state (e.g. renormalisation by the caller).
  void reset_state(const State& y) {
    y_ = y;
    dydt_ = rhs_(t_, y_);
  }

  // Single fifth-order step of signed length dt from the previous accepted
  // point, without error control.
  State trial_from_previous(double dt) const {
    State err;
    return step(prev_t_, prev_y_, prev_dydt_, dt, err, nullptr);
  }

  // Advances to t_target (either direction). `observer(t, y, dydt)` runs after
  // every accepted step and may rewrite y. Returns false if stopped early.
  template <class Observer>
  bool advance_to(double t_target, Observer&& observer) {
    const double span = t_target - t_;
    if (span == 0.0) return true;
    const double dir = span > 0 ? 1.0 : -1.0;
    if (h_ == 0.0 || (h_ > 0) != (dir > 0)) h_ = dir * initial_step(dir);

    while (dir * (t_target - t_) > 0) {
      if (++n_steps_ > tol_.max_steps) {
        throw IntegrationError("step budget exhausted", t_);
      }
      double h = h_;
      bool last = false;
      if (dir * (t_ + h - t_target) >= 0) {
        h = t_target - t_;
        last = true;
      }
      State err;
      State k7;
      State y_new = step(t_, y_, dydt_, h, err, &k7);
      const double enorm = error_norm(err, y_, y_new);
      if (!std::isfinite(enorm) || enorm > 1.0) {
        const double factor =
            std::isfinite(enorm)
                ? std::max(0.2, 0.9 * std::pow(enorm, -0.2))
                : 0.1;
        h_ = h * factor;
        if (std::abs(h_) < tol_.min_step) {
          throw IntegrationError("step size underflow", t_);
        }
        continue;
      }
      prev_t_ = t_;
      prev_y_ = y_;
      prev_dydt_ = dydt_;
      t_ = last ? t_target : t_ + h;
      y_ = std::move(y_new);
      dydt_ = std::move(k7);

      const double grow =
          enorm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(enorm, -0.2));
      const double next = std::min(std::abs(h) * grow, tol_.max_step);
      // A truncated final step says nothing about the natural step size.
      if (!last || std::abs(next) > std::abs(h_)) h_ = dir * next;

      const StepAction action = observer(t_, y_, dydt_);
      if (action == StepAction::modified) dydt_ = rhs_(t_, y_);
      if (action == StepAction::stop) return false;
    }
    return true;
  }

  bool advance_to(double t_target) {
    return advance_to(t_target,
                      [](double, State&, const State&) { return StepAction::proceed; });
  }

 private:
  State step(double t, const State& y, const State& k1, double h, State& err,
             State* k7_out) const {
    using T = detail::DP54;
    const State k2 = rhs_(t + T::c2 * h, (y + h * (T::a21 * k1)).eval());
    const State k3 = rhs_(t + T::c3 * h, (y + h * (T::a31 * k1 + T::a32 * k2)).eval());
    const State k4 = rhs_(
        t + T::c4 * h, (y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)).eval());
    const State k5 = rhs_(t + T::c5 * h,
                          (y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 +
                                    T::a54 * k4))
                              .eval());
    const State k6 = rhs_(t + h, (y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                           T::a64 * k4 + T::a65 * k5))
                                     .eval());
    State y_new = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 +
                           T::b6 * k6);
    if (k7_out) {
      *k7_out = rhs_(t + h, y_new);
      err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 +
                 T::e7 * (*k7_out));
    }
    return y_new;
  }

  double error_norm(const State& err, const State& y0, const State& y1) const {
    const auto scale =
        tol_.abs_tol + tol_.rel_tol * y0.array().abs().max(y1.array().abs());
    return std::sqrt((err.array() / scale).square().mean());
  }

  // Hairer, Norsett & Wanner, "Solving ODEs I", II.4.
  double initial_step(double dir) const {
    const auto scale = tol_.abs_tol + tol_.rel_tol * y_.array().abs();
    const double d0 = std::sqrt((y_.array() / scale).square().mean());
    const double d1 = std::sqrt((dydt_.array() / scale).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, tol_.max_step);
    const State y1 = y_ + dir * h0 * dydt_;
    const State f1 = rhs_(t_ + dir * h0, y1);
    const double d2 = std::sqrt(((f1 - dydt_).array() / scale).square().mean()) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15
                          ? std::max(1e-6, h0 * 1e-3)
                          : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::clamp(std::min(100 * h0, h1), 10 * tol_.min_step, tol_.max_step);
  }

  Rhs rhs_;
  Tolerances tol_;
  double t_;
  State y_;
  State dydt_;
  double h_ = 0.0;
  double prev_t_;
  State prev_y_;
  State prev_dydt_;
  long n_steps_ = 0;
};

template <class State, class Rhs>
AdaptiveIntegrator<State, Rhs> make_integrator(Rhs rhs, double t0, State y0,
                                               Tolerances tol = {}) {
  return AdaptiveIntegrator<State, Rhs>(std::move(rhs), t0, std::move(y0), tol);
}

}  // namespace warpflow::ode
