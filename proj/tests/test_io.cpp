#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "shds/io.hpp"
#include "shds/scenarios.hpp"

using namespace shds;
using nlohmann::json;

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Hash, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(MatrixJson, RoundTrip) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6.5;
  EXPECT_EQ(matrix_from_json(matrix_to_json(m)), m);
  const Vector v = (Vector(3) << 1, -2, 0.25).finished();
  EXPECT_EQ(vector_from_json(vector_to_json(v)), v);
}

TEST(MeasureJson, RoundTripAllKinds) {
  const std::vector<JumpMeasure> ms = {
      JumpMeasure::discrete_scalar({-1, 1}, {0.85, 0.15}), JumpMeasure::uniform_interval(0, 2),
      JumpMeasure::truncated_exponential(100), JumpMeasure::uniform_ball(1.5, 2),
      JumpMeasure::product({JumpMeasure::discrete_scalar({1, 2}, {0.5, 0.5}), JumpMeasure::uniform_interval(0, 2)})};
  for (const auto& m : ms) {
    const json j = to_json(m);
    EXPECT_EQ(to_json(measure_from_json(j)).dump(), j.dump()) << j.dump();
  }
  EXPECT_EQ(to_json(JumpMeasure::truncated_exponential(3)).at("T").get<double>(), 3.0);
  EXPECT_THROW(measure_from_json(json{{"kind", "cauchy"}}), std::invalid_argument);
}

TEST(SimConfigJson, RoundTripAndPolicies) {
  SimConfig c;
  c.step_h = 0.002;
  c.cd_policy = CDPolicy::flow_priority;
  c.flow_selection = SelectionPolicy::fixed(0.25);
  const json j = to_json(c);
  EXPECT_EQ(to_json(sim_config_from_json(j)).dump(), j.dump());
  EXPECT_EQ(parse_cd_policy("jump"), CDPolicy::jump_priority);
  EXPECT_THROW(parse_cd_policy("both"), std::invalid_argument);
  EXPECT_THROW(sim_config_from_json(json{{"step_h", -1.0}}), std::invalid_argument);
  EXPECT_EQ(parse_selection_kind(to_string(SelectionPolicy::Kind::random)), SelectionPolicy::Kind::random);
}

TEST(Reports, InfinitiesBecomeNull) {
  VerificationReport r;
  r.kind = "flow";
  r.entry("empty");
  const json j = to_json(r);
  EXPECT_TRUE(j.at("inequalities")[0].at("max_residual").is_null());
  EXPECT_TRUE(j.at("pass").get<bool>());
  TrialReport t;
  t.estimand = "recurrence";
  TrialRow row;
  row.outcome = "timed_out";
  t.rows.push_back(row);
  EXPECT_TRUE(to_json(t).at("hitting_q95").is_null());
}

namespace {

HybridArc small_arc() {
  HybridArc arc;
  FlowSegment a;
  a.start = {0.0, 0};
  a.samples = {{0.0, StateVector(Vector::Constant(1, 1.0), Vector::Constant(1, -1.0))},
               {0.5, StateVector(Vector::Constant(1, 1.5), Vector::Constant(1, -1.25))}};
  arc.segments.push_back(a);
  JumpRecord jr;
  jr.time = {0.5, 0};
  jr.pre = a.samples.back().y;
  jr.v = Vector::Constant(1, 1.0);
  jr.post = StateVector(Vector::Constant(1, 2.0), Vector::Constant(1, -2.0));
  arc.jumps.push_back(jr);
  return arc;
}

}  // namespace

TEST(Csv, ArcIncludesTrailingPostJumpState) {
  std::ostringstream os;
  write_arc_csv(os, small_arc());
  EXPECT_EQ(os.str(), "t,j,x0,z0\n0,0,1,-1\n0.5,0,1.5,-1.25\n0.5,1,2,-2\n");
  std::ostringstream js;
  write_jump_csv(js, small_arc());
  EXPECT_EQ(js.str(), "t,j,selection,v0,pre_x0,pre_z0,post_x0,post_z0\n0.5,0,1,1,1.5,-1.25,2,-2\n");
}

TEST(Svg, WellFormedAndCarriesHeader) {
  const Scenario s = scenario_example1();
  const HybridArc arc = small_arc();
  const MonitorTrace tr = monitor_along_arc(s.cert, 0.5, arc, 0.5);
  OutputHeader h{"example1", 7, "deadbeef"};
  std::ostringstream os;
  write_arc_svg(os, arc, tr, PlotOptions{}, h);
  const std::string svg = os.str();
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.find("<?xml") == 0, true);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("config_hash deadbeef"), std::string::npos);
  std::ostringstream c;
  h.write_comment(c);
  EXPECT_EQ(c.str().substr(0, 11), "# shds_lab ");
  EXPECT_EQ(h.to_json().at("seed").get<std::uint64_t>(), 7u);
}
