#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "warpflow/errors.hpp"
#include "warpflow/geodesics.hpp"
#include "warpflow/linearization.hpp"
#include "warpflow/surfaces.hpp"

namespace {

using namespace warpflow;

double state_error(const GeodesicState& a, const GeodesicState& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.vx - b.vx),
                   std::abs(a.vy - b.vy)});
}

TEST(Christoffel, Oracles) {
  const auto flat = christoffel(make_flat(), 1.3);
  EXPECT_EQ(flat.gamma1_22, 0.0);
  EXPECT_EQ(flat.gamma2_12, 0.0);

  const auto hyp = christoffel(make_hyperbolic(), 0.0);
  EXPECT_NEAR(hyp.gamma1_22, -1.0, 1e-15);
  EXPECT_NEAR(hyp.gamma2_12, 1.0, 1e-15);

  // g3(0) = -1, g3'(0) = 4.
  const auto g3 = christoffel(make_exp_family(3.0), 0.0);
  EXPECT_NEAR(g3.gamma1_22, -4 * std::exp(-2.0), 1e-14);
  EXPECT_NEAR(g3.gamma2_12, 4.0, 1e-14);
}

TEST(UnitState, IsUnitSpeed) {
  const auto m = make_exp_family(3.0);
  for (double b : {-1.0, -0.3, 0.0, 0.8, 1.0}) {
    const auto s = unit_state(m, 0.7, b, -1);
    EXPECT_NEAR(speed_defect(m, s), 0.0, 1e-15);
    EXPECT_LE(s.vy, 0.0);
  }
  EXPECT_THROW(unit_state(m, 0.0, 1.5), InvalidArgument);
}

TEST(Integrate, FlatStraightLine) {
  const double h = std::numbers::sqrt2 / 2;
  const auto traj = integrate(make_flat(), {0, 0, h, h}, 20.0);
  for (std::size_t i = 0; i < traj.times().size(); ++i) {
    const double t = traj.times()[i];
    EXPECT_NEAR(traj.states()[i].x, h * t, 1e-10);
    EXPECT_NEAR(traj.states()[i].y, h * t, 1e-10);
  }
}

TEST(Integrate, MeridianIsExactLine) {
  const auto m = make_exp_family(3.0);
  const auto traj = integrate(m, {0.4, 1.5, 1.0, 0.0}, 30.0);
  EXPECT_DOUBLE_EQ(traj.horizon(), 30.0);
  for (std::size_t i = 0; i < traj.times().size(); ++i) {
    EXPECT_DOUBLE_EQ(traj.states()[i].x, 0.4 + traj.times()[i]);
    EXPECT_EQ(traj.states()[i].y, 1.5);
  }
}

TEST(Integrate, HyperbolicFromRestGivesTanh) {
  const auto m = make_hyperbolic();
  const auto traj = integrate(m, unit_state(m, 0.0, 0.0), 15.0);
  for (std::size_t i = 0; i < traj.times().size(); ++i) {
    EXPECT_NEAR(traj.states()[i].vx, std::tanh(traj.times()[i]), 1e-9);
  }
}

TEST(Integrate, TimesIncreaseAndSequencesMatch) {
  const auto m = make_catenoid_like();
  const auto traj = integrate(m, unit_state(m, -1.0, 0.2), 10.0);
  ASSERT_EQ(traj.times().size(), traj.states().size());
  ASSERT_EQ(traj.times().size(), traj.curvature_samples().size());
  EXPECT_EQ(traj.times().front(), 0.0);
  for (std::size_t i = 1; i < traj.times().size(); ++i) {
    EXPECT_GT(traj.times()[i], traj.times()[i - 1]);
  }
}

TEST(Integrate, RejectsNonUnitStart) {
  EXPECT_THROW(integrate(make_flat(), {0, 0, 1.0, 0.5}, 1.0), InvalidArgument);
  EXPECT_THROW(integrate(make_flat(), unit_state(make_flat(), 0, 0.3), -1.0), InvalidArgument);
}

TEST(Integrate, LeavingTheDomainThrows) {
  const auto m = make_spherical_band();
  // Great circles other than meridians stay inside the band.
  EXPECT_NO_THROW(integrate(m, unit_state(m, 0.0, 0.999), 5.0));
  EXPECT_THROW(integrate(m, unit_state(m, 0.0, 1.0), 5.0), IntegrationError);
}

struct DriftCase {
  const char* model;
  double x0;
  double b0;
};

class ConservationTest : public ::testing::TestWithParam<DriftCase> {};

TEST_P(ConservationTest, EnergyAndClairautAtThousand) {
  const auto& c = GetParam();
  const auto m = parse_model(c.model);
  const auto traj = integrate(m, unit_state(m, c.x0, c.b0), 1000.0);
  EXPECT_DOUBLE_EQ(traj.horizon(), 1000.0);
  EXPECT_LT(traj.energy_drift(), 1e-7);
  EXPECT_LT(traj.clairaut_drift(), 1e-7);
}

INSTANTIATE_TEST_SUITE_P(
    Presets, ConservationTest,
    ::testing::Values(DriftCase{"flat", 0.0, 0.3}, DriftCase{"hyperbolic", 0.0, 0.0},
                      DriftCase{"exp_family:a=3", 0.5, -0.6},
                      DriftCase{"example2", 0.0, 0.95}, DriftCase{"catenoid", 0.0, 0.3},
                      DriftCase{"sphere_band", 0.0, 0.5}),
    [](const auto& info) {
      std::string s = info.param.model;
      for (char& ch : s) {
        if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
      }
      return s;
    });

TEST(Integrate, ClairautConstantValue) {
  const auto m = make_exp_family(3.0);
  const auto s0 = unit_state(m, 0.2, 0.1);
  const auto traj = integrate(m, s0, 5.0);
  EXPECT_NEAR(traj.clairaut0(), std::exp(2 * m.log_f(0.2)) * s0.vy, 1e-15);
}

TEST(Integrate, TimeReversalRoundTrip) {
  for (const auto& [spec, t] : std::vector<std::pair<const char*, double>>{
           {"exp_family:a=3", 2.0}, {"hyperbolic", 10.0}, {"catenoid", 10.0}}) {
    const auto m = parse_model(spec);
    const auto s0 = unit_state(m, 0.3, -0.2);
    const auto fwd = integrate(m, s0, t);
    const auto back = integrate(m, reversed(fwd.states().back()), t);
    const auto end = reversed(back.states().back());
    EXPECT_LT(state_error(end, s0), 1e-6) << spec;
  }
}

TEST(Integrate, StateAtMatchesSamples) {
  const auto m = make_exp_family(3.0);
  const auto traj = integrate(m, unit_state(m, 0.0, -0.5), 4.0);
  const auto dense = integrate(m, unit_state(m, 0.0, -0.5), 1.2345);
  const auto a = traj.state_at(1.2345, m);
  const auto& b = dense.states().back();
  EXPECT_LT(std::abs(a.x - b.x), 1e-8);
  EXPECT_LT(std::abs(a.y - b.y), 1e-8);
  EXPECT_LT(std::abs(a.vx - b.vx), 1e-6);
  EXPECT_LT(std::abs(a.vy - b.vy) / std::abs(b.vy), 1e-6);
}

TEST(Integrate, CurvatureCapTruncates) {
  const auto m = make_example2();
  IntegratorConfig cfg;
  cfg.curvature_cap = 1e4;
  const auto traj = integrate(m, unit_state(m, 0.0, -1.0), 50.0, cfg);
  EXPECT_TRUE(traj.truncated());
  EXPECT_LT(traj.horizon(), 50.0);
  EXPECT_LE(std::abs(traj.curvature_samples().back()), 1e4);
}

TEST(Reduced, UnitSlopeIsExactLine) {
  const auto m = make_exp_family(3.0);
  const auto orbit = integrate_reduced(m, 1.0, 1.0, 10.0);
  EXPECT_TRUE(orbit.exact_line);
  for (std::size_t i = 0; i < orbit.times.size(); ++i) {
    EXPECT_DOUBLE_EQ(orbit.x[i], 1.0 + orbit.times[i]);
    EXPECT_EQ(orbit.b[i], 1.0);
  }
  const auto snapped = integrate_reduced(m, 1.0, -1.0 + 1e-13, 5.0);
  EXPECT_TRUE(snapped.exact_line);
  EXPECT_DOUBLE_EQ(snapped.x.back(), -4.0);
}

TEST(Reduced, LinearLogWarpingGivesTanh) {
  for (double a : {0.5, 1.0, 2.0}) {
    const auto m = make_hyperbolic(a);
    const auto orbit = integrate_reduced(m, 0.0, 0.0, 10.0);
    for (std::size_t i = 0; i < orbit.times.size(); ++i) {
      EXPECT_NEAR(orbit.b[i], std::tanh(a * orbit.times[i]), 1e-9);
    }
  }
}

TEST(Reduced, FlatKeepsSlope) {
  const auto orbit = integrate_reduced(make_flat(), 2.0, 0.3, 10.0);
  for (std::size_t i = 0; i < orbit.times.size(); ++i) {
    EXPECT_NEAR(orbit.b[i], 0.3, 1e-15);
    EXPECT_NEAR(orbit.x[i], 2.0 + 0.3 * orbit.times[i], 1e-12);
  }
}

TEST(Reduced, IncludesOutputTimes) {
  const std::vector<double> grid{0.5, 1.0, 2.5};
  const auto orbit = integrate_reduced(make_exp_family(3.0), 0.0, 0.1, 3.0, {}, grid);
  for (double t : grid) {
    EXPECT_NE(std::find(orbit.times.begin(), orbit.times.end(), t), orbit.times.end());
  }
  EXPECT_EQ(orbit.times.back(), 3.0);
}

TEST(Reduced, AgreesWithFullSystem) {
  const auto m = make_exp_family(3.0);
  for (double b0 : {-0.9, -0.4, 0.2}) {
    const auto full = integrate(m, unit_state(m, 0.3, b0), 100.0);
    const auto red = integrate_reduced(m, 0.3, b0, 100.0);
    for (double t = 0.5; t <= 100.0; t += 0.5) {
      EXPECT_NEAR(full.path().value_at(t), red.path.value_at(t), 1e-6) << "b0=" << b0 << " t=" << t;
    }
  }
}

TEST(Reduced, SlopeIncreasesUnderSlopeBounds) {
  const auto m = make_exp_family(3.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  for (int k = 0; k < 10; ++k) {
    const auto orbit = integrate_reduced(m, u(rng), u(rng), 5.0);
    for (std::size_t i = 1; i < orbit.times.size(); ++i) {
      // Rapidity is the strictly monotone quantity; b itself saturates at 1.
      EXPECT_GT(orbit.rapidity[i], orbit.rapidity[i - 1]);
      EXPECT_GE(orbit.b[i], orbit.b[i - 1]);
    }
  }
}

TEST(Envelope, LinearCaseSqueezesTanh) {
  const double a = 1.0;
  const auto m = make_hyperbolic(a);
  const auto grid = uniform_grid(0.0, 20.0, 0.5);
  for (double eps : {1e-1, 1e-3}) {
    const auto env = envelope_check(m, 0.0, 0.5, grid, {}, SlopeBounds{2 * a - eps, 2 * a + eps});
    EXPECT_TRUE(env.inside);
    EXPECT_GT(env.min_margin, 0.0);
  }
  // With C = 2a the bound is tanh(a t + atanh b0) itself.
  const auto env = envelope_check(m, 0.0, 0.5, grid, {}, SlopeBounds{2 * a, 2 * a});
  for (const auto& s : env.samples) {
    EXPECT_NEAR(s.lower, std::tanh(a * s.t + std::atanh(0.5)), 1e-12);
    EXPECT_NEAR(s.b, s.lower, 1e-9);
  }
}

TEST(Envelope, ExpFamilyFromRest) {
  const auto m = make_exp_family(3.0);
  const auto env = envelope_check(m, 0.0, 0.0, uniform_grid(0.0, 20.0, 0.1));
  EXPECT_TRUE(env.inside);
  EXPECT_DOUBLE_EQ(env.B0, 1.0);
  EXPECT_DOUBLE_EQ(env.samples.front().lower, 0.0);
  EXPECT_DOUBLE_EQ(env.samples.front().upper, 0.0);
}

TEST(Envelope, NeedsSlopeBounds) {
  EXPECT_THROW(envelope_check(make_example2(), 0.0, 0.0, uniform_grid(0.0, 1.0, 0.5)),
               NotApplicable);
  EXPECT_THROW(envelope_check(make_exp_family(3.0), 0.0, 1.0, uniform_grid(0.0, 1.0, 0.5)),
               InvalidArgument);
}

TEST(Envelope, ViolationIsReported) {
  // Bounds that exclude the true slope g' = 1.
  const auto env = envelope_check(make_hyperbolic(), 0.0, 0.0, uniform_grid(0.0, 5.0, 0.5), {},
                                  SlopeBounds{2.5, 3.0});
  EXPECT_FALSE(env.inside);
  EXPECT_LT(env.min_margin, 0.0);
}

}  // namespace
