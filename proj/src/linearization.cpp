#include "warpflow/linearization.hpp"

#include <cmath>

namespace warpflow {

CurvatureProfile<1> trajectory_profile(const SurfaceModel& m,
                                       std::shared_ptr<const Trajectory> traj) {
  return [&m, traj = std::move(traj)](double t) {
    const double horizon = traj->horizon();
    // Adaptive stages may probe a hair past the last node.
    const double tc = std::min(std::max(t, 0.0), horizon);
    return Square<1>::Constant(m.raw_curvature(traj->path().value_at(tc)));
  };
}

OrbitSource<1> orbit_source(const SurfaceModel& m, const GeodesicState& theta,
                            const LinearizationConfig& cfg) {
  OrbitSource<1> src;
  src.dim = 1;
  src.theta = theta;
  IntegratorConfig orbit_cfg = cfg.orbit;
  orbit_cfg.curvature_cap = cfg.curvature_cap;
  src.extend = [&m, theta, orbit_cfg](double h, bool rev) {
    auto traj = std::make_shared<const Trajectory>(
        integrate(m, rev ? reversed(theta) : theta, h, orbit_cfg));
    const double reached = traj->truncated() ? traj->horizon() : h;
    return std::pair<CurvatureProfile<1>, double>(trajectory_profile(m, traj), reached);
  };
  return src;
}

namespace {

std::vector<double> default_times(const Trajectory& traj, std::span<const double> times) {
  if (!times.empty()) return {times.begin(), times.end()};
  return traj.times();
}

}  // namespace

std::vector<JacobiFrame<1>> propagate_jacobi(const SurfaceModel& m, const Trajectory& traj,
                                             double Y0, double Yp0,
                                             std::span<const double> times,
                                             const LinearizationConfig& cfg) {
  auto shared = std::make_shared<const Trajectory>(traj);
  const auto grid = default_times(traj, times);
  return propagate_jacobi<1>(trajectory_profile(m, shared), Square<1>::Constant(Y0),
                             Square<1>::Constant(Yp0), grid, cfg);
}

std::vector<RiccatiState<1>> riccati_flow(const SurfaceModel& m, const Trajectory& traj,
                                          double u0, std::span<const double> times,
                                          const LinearizationConfig& cfg) {
  auto shared = std::make_shared<const Trajectory>(traj);
  const auto grid = default_times(traj, times);
  return riccati_flow<1>(trajectory_profile(m, shared), Square<1>::Constant(u0), grid, cfg);
}

BundleEstimate<1> green_bundle(const SurfaceModel& m, const GeodesicState& theta,
                               const LinearizationConfig& cfg) {
  return green_bundle<1>(orbit_source(m, theta, cfg), cfg);
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0)) throw InvalidArgument("grid spacing must be positive");
  const long n = std::lround(std::ceil((t1 - t0) / dt - 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i < n; ++i) out.push_back(t0 + static_cast<double>(i) * dt);
  out.push_back(t1);
  return out;
}

}  // namespace warpflow
