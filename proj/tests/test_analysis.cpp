#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>

#include "shds/analysis.hpp"
#include "shds/io.hpp"
#include "shds/scenarios.hpp"

using namespace shds;

TEST(Wilson, ReferenceValues) {
  const Proportion half = wilson(5, 10);
  EXPECT_NEAR(half.lower, 0.2365931, 1e-6);
  EXPECT_NEAR(half.upper, 0.7634069, 1e-6);
  const Proportion none = wilson(0, 10);
  const double z2 = 1.959963984540054 * 1.959963984540054;
  EXPECT_EQ(none.lower, 0.0);
  EXPECT_NEAR(none.upper, (z2 / 10) / (1 + z2 / 10), 1e-12);
  const Proportion all = wilson(200, 200);
  EXPECT_NEAR(all.lower, 1.0 - (z2 / 200) / (1 + z2 / 200), 1e-12);
  EXPECT_EQ(all.upper, 1.0);
  EXPECT_EQ(wilson(0, 0).trials, 0);
}

TEST(ParallelFor, EachIndexOnceAndErrorsPropagate) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, [&](long i) { hits[i]++; }, 4);
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(
                   50, [](long i) { if (i == 17) throw std::runtime_error("boom"); }, 3),
               std::runtime_error);
  parallel_for(0, [](long) { FAIL(); });
}

TEST(Threads, EnvironmentCap) {
  ::setenv("SHDS_LAB_THREADS", "2", 1);
  EXPECT_EQ(resolve_thread_count(8), 2);
  EXPECT_EQ(resolve_thread_count(1), 1);
  ::setenv("SHDS_LAB_THREADS", "junk", 1);
  EXPECT_EQ(resolve_thread_count(5), 5);
  ::unsetenv("SHDS_LAB_THREADS");
  EXPECT_GE(resolve_thread_count(0), 1);
}

TEST(Quantiles, NearestRankWithCensoring) {
  TrialReport r;
  for (int i = 0; i < 10; ++i) {
    TrialRow row;
    row.outcome = i < 8 ? "hit" : "timed_out";
    row.hitting_time = i < 8 ? double(i + 1) : -1.0;
    row.settling_time = double(10 - i);
    r.rows.push_back(row);
  }
  EXPECT_EQ(r.hitting_quantile(0.5), 5.0);
  EXPECT_EQ(r.hitting_quantile(0.8), 8.0);
  EXPECT_TRUE(std::isinf(r.hitting_quantile(0.95)));
  r.rows[9].outcome = "stopped";
  r.rows[8].outcome = "stopped";
  EXPECT_EQ(r.hitting_quantile(0.95), 8.0);
  EXPECT_EQ(r.settling_quantile(0.95), 10.0);
}

TEST(ZeroScenario, TrivialEstimates) {
  const Scenario s = make_scenario("zero");
  const TrialReport c = estimate_containment(s.system, s.cert, s.init_set(1.0), 0.5, 0.0, 20, 1, s.config);
  EXPECT_EQ(c.containment_all.successes, 20);
  EXPECT_EQ(c.containment_tail.value, 1.0);
  const TrialReport r = estimate_recurrence(s.system, s.cert, s.init_set(1.0), 20, 5.0, 1, s.config);
  EXPECT_EQ(r.hit.successes, 20);
  for (const auto& row : r.rows) EXPECT_EQ(row.hitting_time, 0.0);
  EXPECT_EQ(r.hitting_quantile(0.95), 0.0);
}

TEST(Estimators, ThreadCountInvariance) {
  const Scenario s = make_scenario("example1", std::nullopt, false);
  const TrialReport a = estimate_recurrence(s.system, s.cert, s.init_set(5.0), 40, 30.0, 3, s.config, 1);
  const TrialReport b = estimate_recurrence(s.system, s.cert, s.init_set(5.0), 40, 30.0, 3, s.config, 4);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.success.successes, 40);
}

TEST(Estimators, ArgumentValidation) {
  const Scenario s = make_scenario("zero");
  EXPECT_THROW(estimate_containment(s.system, s.cert, s.init_set(1), 0.5, 0, 0, 1, s.config), std::invalid_argument);
  EXPECT_THROW(estimate_containment(s.system, s.cert, s.init_set(1), -1, 0, 5, 1, s.config), std::invalid_argument);
  EXPECT_THROW(estimate_recurrence(s.system, s.cert, s.init_set(1), 5, 0.0, 1, s.config), std::invalid_argument);
  CertificateData no_ox = s.cert;
  no_ox.in_Ox = nullptr;
  EXPECT_THROW(estimate_recurrence(s.system, no_ox, s.init_set(1), 5, 1.0, 1, s.config), std::invalid_argument);
}

TEST(DrawInitial, RejectsUntilInsideAndGivesUp) {
  const Scenario s = make_scenario("bounded_inputs", std::nullopt, false);
  RandomStream st(1, 0, kInitialChannel);
  long rejected = 0;
  // Half the draws put |u| outside the input bound and must be resampled.
  const InitialSampler wide = [](RandomStream& r) {
    Draw d = r.next();
    return StateVector((Vector(5) << 0, 0, 4 * d.uniform() - 2, 0, 0.5).finished(), Vector::Zero(2));
  };
  for (int i = 0; i < 50; ++i) {
    const StateVector y = draw_initial(s.system, wide, st, rejected);
    EXPECT_LE(std::abs(y.x[2]), 1.0 + 1e-9);
  }
  EXPECT_GT(rejected, 0);
  const InitialSampler never = [](RandomStream&) {
    return StateVector((Vector(5) << 0, 0, 5, 0, 0.5).finished(), Vector::Zero(2));
  };
  EXPECT_THROW(draw_initial(s.system, never, st, rejected), std::runtime_error);
}

TEST(Sweeps, OrderingChecksAndMetrics) {
  EXPECT_THROW(uniformity_sweep([](double, long) { return TrialReport(); }, {2.0, 1.0}, 5), std::invalid_argument);
  auto inst = [](double eps) {
    const Scenario s = make_scenario("example1", eps, false);
    return SweepInstance{s.system, s.cert, s.ledger, s.init_set(2.0), s.config};
  };
  EXPECT_THROW(epsilon_sweep(inst, {0.01, 0.1}, SweepMetric::recurrence, 5), std::invalid_argument);
  EXPECT_THROW(epsilon_sweep(inst, {0.1, -0.1}, SweepMetric::recurrence, 5), std::invalid_argument);
  SweepSettings set;
  set.horizon = 20.0;
  const auto rows = epsilon_sweep(inst, {0.1, 0.05}, SweepMetric::recurrence, 10, set);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].metric, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].epsilon_star, 0.25);
  EXPECT_EQ(parse_sweep_metric("monitor"), SweepMetric::monitor_violations);
  EXPECT_EQ(to_string(parse_sweep_metric("containment")), "containment");
  EXPECT_THROW(parse_sweep_metric("speed"), std::invalid_argument);
}

TEST(AttractorDistance, MaxOfBothParts) {
  const Scenario s = make_scenario("example1", std::nullopt, false);
  EXPECT_DOUBLE_EQ(attractor_distance(s.cert, StateVector(Vector::Constant(1, 3.0), Vector::Constant(1, -3.5))), 2.0);
  EXPECT_DOUBLE_EQ(attractor_distance(s.cert, StateVector(Vector::Constant(1, 0.5), Vector::Constant(1, 4.5))), 5.0);
}
