#include "warpflow/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "warpflow/errors.hpp"
#include "warpflow/quadrature.hpp"

namespace warpflow {

SurfaceModel SurfaceModel::from_warping(std::string label, ScalarFunction f,
                                        ScalarFunction df, ScalarFunction d2f) {
  if (!f || !df || !d2f) throw InvalidArgument("all three warping evaluators are required");
  SurfaceModel m;
  m.label_ = std::move(label);
  m.log_native_ = false;
  m.e0_ = std::move(f);
  m.e1_ = std::move(df);
  m.e2_ = std::move(d2f);
  return m;
}

SurfaceModel SurfaceModel::from_log_warping(std::string label, ScalarFunction g,
                                            ScalarFunction dg, ScalarFunction d2g) {
  if (!g || !dg || !d2g) throw InvalidArgument("all three log-warping evaluators are required");
  SurfaceModel m;
  m.label_ = std::move(label);
  m.log_native_ = true;
  m.e0_ = std::move(g);
  m.e1_ = std::move(dg);
  m.e2_ = std::move(d2g);
  return m;
}

double SurfaceModel::f(double x) const {
  return log_native_ ? std::exp(e0_(x)) : e0_(x);
}

double SurfaceModel::df(double x) const {
  return log_native_ ? e1_(x) * std::exp(e0_(x)) : e1_(x);
}

double SurfaceModel::d2f(double x) const {
  if (!log_native_) return e2_(x);
  const double g1 = e1_(x);
  return (e2_(x) + g1 * g1) * std::exp(e0_(x));
}

double SurfaceModel::log_f(double x) const {
  return log_native_ ? e0_(x) : std::log(e0_(x));
}

double SurfaceModel::log_slope(double x) const {
  return log_native_ ? e1_(x) : e1_(x) / e0_(x);
}

double SurfaceModel::log_slope_derivative(double x) const {
  if (log_native_) return e2_(x);
  const double f0 = e0_(x);
  const double g1 = e1_(x) / f0;
  return e2_(x) / f0 - g1 * g1;
}

double SurfaceModel::curvature_from_warping(double x) const { return -d2f(x) / f(x); }

double SurfaceModel::curvature_from_log(double x) const {
  const double g1 = log_slope(x);
  return -(log_slope_derivative(x) + g1 * g1);
}

double SurfaceModel::raw_curvature(double x) const {
  if (log_native_) {
    const double g1 = e1_(x);
    return -(e2_(x) + g1 * g1);
  }
  return -e2_(x) / e0_(x);
}

SurfaceModel& SurfaceModel::with_period(double T) {
  if (!(T > 0)) throw InvalidArgument("period must be positive");
  period_ = T;
  sample_window_ = {0.0, T};
  return *this;
}

SurfaceModel& SurfaceModel::with_slope_bounds(SlopeBounds b) {
  if (!(b.c1 > 0) || !(b.c2 >= b.c1)) throw InvalidArgument("slope bounds need 0 < C1 <= C2");
  slope_bounds_ = b;
  return *this;
}

SurfaceModel& SurfaceModel::with_curvature_bound(double c) {
  if (!(c > 0)) throw InvalidArgument("curvature bound must be positive");
  curvature_bound_ = c;
  return *this;
}

SurfaceModel& SurfaceModel::with_domain(Interval d) {
  domain_ = d;
  return *this;
}

SurfaceModel& SurfaceModel::with_sample_window(Interval w) {
  if (!(w.hi > w.lo)) throw InvalidArgument("sample window must be non-empty");
  sample_window_ = w;
  return *this;
}

double curvature(const SurfaceModel& m, double x) {
  if (!std::isfinite(x)) throw EvaluationError("non-finite position", x);
  const double k = m.raw_curvature(x);
  if (!std::isfinite(k)) throw EvaluationError("non-finite curvature", x);
  return k;
}

double estimate_curvature_bound(const SurfaceModel& m, Interval window,
                                double grid_step) {
  const int n = static_cast<int>(std::ceil(window.length() / grid_step));
  double kmax = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = std::min(window.lo + i * grid_step, window.hi);
    kmax = std::max(kmax, std::abs(curvature(m, x)));
  }
  return 1.01 * std::sqrt(kmax);
}

SurfaceModel make_exp_family(double a) {
  constexpr double sqrt2 = std::numbers::sqrt2;
  if (!(a > sqrt2)) {
    throw InvalidArgument("exp_family: a <= sqrt(2) leaves no positive slope bound C1");
  }
  if (!(a > 2 * sqrt2)) {
    throw InvalidArgument("exp_family: a must exceed 2 sqrt(2) for g'' + g'^2 >= 0");
  }
  std::ostringstream label;
  label << "exp_family:a=" << a;
  auto m = SurfaceModel::from_log_warping(
      label.str(), [a](double x) { return a * x - std::cos(x) + std::sin(x); },
      [a](double x) { return a + std::sin(x) + std::cos(x); },
      [](double x) { return std::cos(x) - std::sin(x); });
  const double T = 2 * std::numbers::pi;
  m.with_period(T).with_slope_bounds({2 * (a - sqrt2), 2 * (a + sqrt2)});
  m.with_curvature_bound(estimate_curvature_bound(m, {0.0, T}, 1e-3 * T));
  return m;
}

SurfaceModel make_example2() {
  auto m = SurfaceModel::from_log_warping(
      "example2", [](double x) { return std::exp(-x); },
      [](double x) { return -std::exp(-x); }, [](double x) { return std::exp(-x); });
  m.with_sample_window({0.0, 20.0});
  return m;
}

SurfaceModel make_flat() {
  auto m = SurfaceModel::from_log_warping(
      "flat", [](double) { return 0.0; }, [](double) { return 0.0; },
      [](double) { return 0.0; });
  // Constant curvature is periodic with any period.
  m.with_period(1.0);
  return m;
}

SurfaceModel make_hyperbolic(double rate) {
  if (!(rate > 0)) throw InvalidArgument("hyperbolic: rate must be positive");
  std::string label = "hyperbolic";
  if (rate != 1.0) {
    std::ostringstream os;
    os << "hyperbolic:rate=" << rate;
    label = os.str();
  }
  auto m = SurfaceModel::from_log_warping(
      label, [rate](double x) { return rate * x; }, [rate](double) { return rate; },
      [](double) { return 0.0; });
  m.with_period(1.0).with_curvature_bound(1.01 * rate);
  return m;
}

SurfaceModel make_catenoid_like() {
  auto m = SurfaceModel::from_warping(
      "catenoid", [](double x) { return std::sqrt(1 + x * x); },
      [](double x) { return x / std::sqrt(1 + x * x); },
      [](double x) { return 1.0 / std::pow(1 + x * x, 1.5); });
  m.with_sample_window({-5.0, 5.0}).with_curvature_bound(1.01);
  return m;
}

SurfaceModel make_spherical_band() {
  const double half = std::numbers::pi / 2;
  auto m = SurfaceModel::from_warping(
      "sphere_band", [](double x) { return std::cos(x); },
      [](double x) { return -std::sin(x); }, [](double x) { return -std::cos(x); });
  m.with_domain({-half, half}).with_sample_window({-0.5, 0.5}).with_curvature_bound(1.01);
  return m;
}

namespace {

std::map<std::string, double> parse_params(const std::string& text,
                                           const std::string& spec) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("model spec '" + spec + "': expected key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) {
      throw InvalidArgument("model spec '" + spec + "': '" + key + "' is not a number");
    }
    out[key] = v;
  }
  return out;
}

}  // namespace

SurfaceModel parse_model(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  auto params = colon == std::string::npos ? std::map<std::string, double>{}
                                           : parse_params(spec.substr(colon + 1), spec);
  auto take = [&](const std::string& key, std::optional<double> fallback) {
    auto it = params.find(key);
    if (it == params.end()) {
      if (!fallback) throw InvalidArgument("model spec '" + spec + "': missing '" + key + "'");
      return *fallback;
    }
    const double v = it->second;
    params.erase(it);
    return v;
  };

  std::optional<SurfaceModel> m;
  if (name == "flat") {
    m = make_flat();
  } else if (name == "hyperbolic") {
    m = make_hyperbolic(take("rate", 1.0));
  } else if (name == "exp_family") {
    m = make_exp_family(take("a", std::nullopt));
  } else if (name == "example2") {
    m = make_example2();
  } else if (name == "catenoid") {
    m = make_catenoid_like();
  } else if (name == "sphere_band") {
    m = make_spherical_band();
  } else {
    throw InvalidArgument("unknown model '" + name + "'");
  }
  if (!params.empty()) {
    throw InvalidArgument("model spec '" + spec + "': unknown parameter '" +
                          params.begin()->first + "'");
  }
  return *m;
}

ConditionReport validate_conditions(const SurfaceModel& m, const ValidationConfig& cfg) {
  ConditionReport rep;
  const auto& period = m.period();
  const Interval window = period ? Interval{0.0, *period} : m.sample_window();
  const double step = cfg.grid_step.value_or(period ? 1e-3 * *period : 1e-3);
  if (!(step > 0)) throw InvalidArgument("grid step must be positive");
  rep.window = window;
  rep.grid_resolution = step;

  const int n = static_cast<int>(std::ceil(window.length() / step));
  double min_h = std::numeric_limits<double>::infinity();
  double min_slope = std::numeric_limits<double>::infinity();
  double max_slope = -std::numeric_limits<double>::infinity();
  double max_period_gap = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = std::min(window.lo + i * step, window.hi);
    if (!(m.f(x) > 0) && !m.has_log_form()) {
      throw EvaluationError("warping function not positive", x);
    }
    const double k = curvature(m, x);
    min_h = std::min(min_h, -k);
    const double slope = m.log_slope(x);
    min_slope = std::min(min_slope, slope);
    max_slope = std::max(max_slope, slope);
    if (period) {
      const double gap = std::abs(curvature(m, x + *period) - k);
      max_period_gap = std::max(max_period_gap, gap / std::max(1.0, std::abs(k)));
    }
  }

  rep.condA_ok = min_h >= -cfg.tol;
  rep.condB_checkable = period.has_value();
  rep.condB_ok = period.has_value() && max_period_gap < cfg.tol;
  rep.measured_C1 = 2 * min_slope;
  rep.measured_C2 = 2 * max_slope;
  rep.condC_ok = rep.measured_C1 > 0 && std::isfinite(rep.measured_C2);
  if (rep.condC_ok && m.slope_bounds()) {
    const auto& b = *m.slope_bounds();
    rep.condC_ok = b.c1 <= rep.measured_C1 + cfg.tol && b.c2 >= rep.measured_C2 - cfg.tol;
  }
  if (rep.condB_ok) {
    rep.eta = quadrature::composite([&](double x) { return curvature(m, x); }, window.lo,
                                    window.hi, std::max(n, 1));
  }
  return rep;
}

}  // namespace warpflow
