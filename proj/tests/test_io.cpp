#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "warpflow/errors.hpp"
#include "warpflow/io.hpp"

namespace {

using namespace warpflow;
using nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class T>
T round_trip(const T& v) {
  std::stringstream ss;
  write_json(ss, json(v));
  return read_json(ss).get<T>();
}

TEST(Format, MachinePrecisionRoundTrips) {
  for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(std::stod(format_machine(v)), v);
  }
  EXPECT_EQ(format_table(1.0 / 3), "0.333333");
}

TEST(Json, ScanReportRoundTrip) {
  ScanConfig cfg;
  cfg.n_geodesics = 6;
  cfg.t_final = 8;
  auto rep = criterion_scan(make_exp_family(3.0), cfg);
  ASSERT_TRUE(rep.floor);
  EXPECT_TRUE(round_trip(rep) == rep);

  rep.floor.reset();
  rep.t_star.reset();
  rep.geodesics[1].ok = false;
  rep.geodesics[1].error = "left the domain";
  rep.geodesics[1].final_avg = -kInf;
  rep.sup_avg_at.back().second = kInf;
  const auto back = round_trip(rep);
  EXPECT_TRUE(back == rep);
  EXPECT_EQ(back.final_sup(), kInf);
}

TEST(Json, ScanReportLayout) {
  ScanConfig cfg;
  cfg.n_geodesics = 2;
  cfg.t_final = 2;
  const json j = criterion_scan(make_flat(), cfg);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("model_label"), "flat");
  EXPECT_EQ(j.at("verdict"), "criterion_failed");
  EXPECT_TRUE(j.at("floor").is_null());
  EXPECT_EQ(j.at("config").at("n_geodesics"), 2);
}

TEST(Json, ConditionReportAndFloor) {
  const auto m = make_exp_family(4.0);
  const auto rep = validate_conditions(m);
  const auto back = round_trip(rep);
  EXPECT_EQ(back.condA_ok, rep.condA_ok);
  EXPECT_EQ(back.condC_ok, rep.condC_ok);
  EXPECT_EQ(back.measured_C1, rep.measured_C1);
  EXPECT_EQ(back.eta, rep.eta);
  EXPECT_EQ(back.window, rep.window);

  const auto fl = theoretical_floor(m);
  EXPECT_TRUE(round_trip(fl) == fl);

  auto flat = validate_conditions(make_flat());
  flat.eta.reset();
  EXPECT_FALSE(round_trip(flat).eta);
}

TEST(Json, HyperbolicityStatsWithInfinities) {
  HyperbolicityStats st;
  st.min_angle_delta = 1.25;
  st.D_check = true;
  st.stable = ContractionFit{2.0, 0.5, 1.0, 0.5, 1.0, true};
  st.stable_samples = {{0, 1}, {1, 0.5}};
  st.unstable_samples = {{0, kInf}};
  BundleEstimate<1> b;
  b.u_s = Square<1>::Constant(-1);
  b.u_u = Square<1>::Constant(kInf);
  b.history_s = {0.1, 1e-9};
  b.converged = true;
  b.theta = GeodesicState{0.5, 0.0, 0.6, 0.8};
  st.bundles.push_back(b);

  const auto back = round_trip(st);
  EXPECT_EQ(back.min_angle_delta, 1.25);
  ASSERT_TRUE(back.stable);
  EXPECT_EQ(back.stable->lambda, 0.5);
  EXPECT_FALSE(back.unstable);
  EXPECT_EQ(back.unstable_samples.front().second, kInf);
  ASSERT_EQ(back.bundles.size(), 1u);
  EXPECT_EQ(back.bundles[0].u_u(0, 0), kInf);
  EXPECT_EQ(back.bundles[0].history_s, b.history_s);
  ASSERT_TRUE(back.bundles[0].theta);
  EXPECT_EQ(back.bundles[0].theta->vy, 0.8);
}

TEST(Json, RejectsWrongSchemaVersion) {
  std::stringstream ss(R"({"schema_version": 2})");
  EXPECT_THROW(read_json(ss), InvalidArgument);
  std::stringstream missing(R"({"a": 1})");
  EXPECT_ANY_THROW(read_json(missing));
}

TEST(Csv, TrajectoryHeaderAndPrecision) {
  const auto m = make_hyperbolic();
  const auto traj = integrate(m, unit_state(m, 0.1, 0.3), 2.0);
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "# schema_version: 1");
  std::getline(ss, line);
  EXPECT_EQ(line, "t,x,y,vx,vy,K,clairaut");
  ss.seekg(0);
  const auto rows = read_csv(ss);
  ASSERT_EQ(rows.size(), traj.times().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 7u);
    EXPECT_EQ(rows[i][0], traj.times()[i]);
    EXPECT_EQ(rows[i][1], traj.states()[i].x);
    EXPECT_EQ(rows[i][5], -1.0);
  }
}

TEST(Csv, AverageAndSeries) {
  AverageSeries s{{1, 2, 3}, {-1.0 / 3, -0.5, -0.7}};
  std::stringstream a;
  write_average_csv(a, s);
  EXPECT_NE(a.str().find("t,avg\n"), std::string::npos);
  const auto rows = read_csv(a);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][1], -1.0 / 3);

  const std::vector<std::pair<double, double>> pts{{0, 1}, {0.5, 2}};
  std::stringstream b;
  write_series_csv(b, "t,logdet_u", pts);
  EXPECT_EQ(b.str(), "# schema_version: 1\nt,logdet_u\n0,1\n0.5,2\n");
}

TEST(Csv, BundlesNeedOneTimePerEstimate) {
  const std::vector<double> t{0, 1};
  const std::vector<BundleEstimate<1>> b(1);
  std::stringstream ss;
  EXPECT_THROW(write_bundles_csv(ss, t, b), InvalidArgument);
}

}  // namespace
