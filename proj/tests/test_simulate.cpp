#include <gtest/gtest.h>

#include <cmath>

#include "shds/simulate.hpp"

using namespace shds;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

SPSystem decay(double eps) {
  SPSystem s;
  s.n_x = 1;
  s.n_z = 1;
  s.epsilon = eps;
  s.flow_x = {[](const StateVector& y, double) { return Vector(-y.x); }, false};
  s.flow_z = {[](const StateVector& y, double) { return Vector(-(y.z + y.x)); }, false};
  s.manifold = Manifold::affine(-Matrix::Identity(1, 1), Vector::Zero(1));
  return s;
}

// Timer tau' = 1 on [0, 1], reset to v ~ U{0, 1/2} at tau = 1.
SPSystem timer() {
  SPSystem s;
  s.n_x = 1;
  s.n_z = 0;
  s.flow_set = SetPredicate::product([](const Vector& x) { return interval_membership(x[0], 0, 1); }, {});
  s.jump_set = SetPredicate([](const StateVector& y) { return std::abs(y.x[0] - 1.0); },
                            [](const StateVector& y) { return y.x[0] - 1.0; });
  s.flow_x = {[](const StateVector&, double) { return Vector(v1(1.0)); }, false};
  s.flow_z = {[](const StateVector&, double) { return Vector(0); }, false};
  s.jump_map = {[](const StateVector&, const Vector& v, double) { return StateVector(v1(v[0]), Vector(0)); }, false};
  s.measure = JumpMeasure::discrete_scalar({0.0, 0.5}, {0.5, 0.5});
  s.manifold = Manifold::generic({}, [](const Vector&, const Vector&) { return 0.0; });
  return s;
}

SimConfig config(double h, double T) {
  SimConfig c;
  c.step_h = h;
  c.horizon_t = T;
  return c;
}

}  // namespace

TEST(RK4, FourthOrderAccuracy) {
  const SPSystem s = decay(1.0);
  // Only the slow state matters here; the error ratio halving h is ~16.
  auto err = [&](double h) {
    const HybridArc arc = simulate_arc(s, StateVector(v1(1.0), v1(-1.0)), RandomStream(), config(h, 1.0));
    return std::abs(arc.end_state().x[0] - std::exp(-1.0));
  };
  const double e1 = err(0.1), e2 = err(0.05);
  EXPECT_LT(e1, 1e-6);
  EXPECT_NEAR(e1 / e2, 16.0, 1.5);
}

TEST(Simulate, StiffFastStateFollowsExactSolution) {
  const double eps = 0.01;
  const SPSystem s = decay(eps);
  const HybridArc arc = simulate_arc(s, StateVector(v1(1.0), v1(2.0)), RandomStream(), config(eps / 20, 2.0));
  // z(t) = a e^{-t} + (z0 - a) e^{-t/eps} with a = 1/(1 - eps) when x0 = 1.
  const double a = 1.0 / (1.0 - eps);
  const double t = arc.end_time().t;
  EXPECT_DOUBLE_EQ(t, 2.0);
  EXPECT_NEAR(arc.end_state().z[0], -a * std::exp(-t) + (2.0 + a) * std::exp(-t / eps), 1e-8);
  EXPECT_EQ(arc.termination, Termination::horizon_reached);
}

TEST(Simulate, TimerJumpsAreLocalized) {
  SimConfig c = config(0.03, 5.0);
  c.horizon_j = 100;
  const HybridArc arc = simulate_arc(timer(), StateVector(v1(0.0), Vector(0)), RandomStream(4, 0), c);
  ASSERT_FALSE(arc.jumps.empty());
  double expected = 1.0;
  for (const JumpRecord& j : arc.jumps) {
    EXPECT_NEAR(j.time.t, expected, 1e-9);
    EXPECT_NEAR(j.pre.x[0], 1.0, 1e-9);
    expected += 1.0 - j.v[0];
  }
  // Segments alternate with jumps and hybrid time is ordered.
  for (std::size_t k = 0; k + 1 < arc.segments.size(); ++k) {
    EXPECT_TRUE(precedes(arc.segments[k].start, arc.segments[k + 1].start));
    EXPECT_EQ(arc.segments[k + 1].start.j, arc.segments[k].start.j + 1);
  }
}

TEST(Simulate, JumpBudgetAndFlowPriority) {
  SimConfig c = config(0.01, 100.0);
  c.horizon_j = 3;
  const HybridArc arc = simulate_arc(timer(), StateVector(v1(0.0), Vector(0)), RandomStream(1, 0), c);
  EXPECT_EQ(arc.termination, Termination::jump_budget_exhausted);
  EXPECT_EQ(arc.jumps.size(), 3u);
  // Under flow priority the timer at 1 is still in C but the flow leaves C at once.
  c.cd_policy = CDPolicy::flow_priority;
  const HybridArc fp = simulate_arc(timer(), StateVector(v1(1.0), Vector(0)), RandomStream(1, 0), c);
  EXPECT_EQ(fp.jumps.size(), 3u);
}

TEST(Simulate, LeavingCAndDTerminates) {
  SPSystem s = timer();
  s.jump_set = SetPredicate::nothing();
  const HybridArc arc = simulate_arc(s, StateVector(v1(0.25), Vector(0)), RandomStream(), config(0.1, 10.0));
  EXPECT_EQ(arc.termination, Termination::left_C_and_D);
  EXPECT_NEAR(arc.end_time().t, 0.75, 1e-9);
}

TEST(Simulate, NonFiniteStateCarriesLastFiniteState) {
  SPSystem s = decay(1.0);
  s.flow_x.eval = [](const StateVector& y, double) { return Vector(y.x.array().square().matrix()); };
  try {
    simulate_arc(s, StateVector(v1(1.0), v1(0.0)), RandomStream(), config(0.01, 5.0));
    FAIL() << "expected NonFiniteStateError";
  } catch (const NonFiniteStateError& e) {
    EXPECT_TRUE(e.last_finite().all_finite());
    // Blow-up is at t = 1; the last finite step may land just past it.
    EXPECT_GT(e.time(), 0.9);
    EXPECT_LT(e.time(), 1.1);
  }
}

TEST(Simulate, ObserverStopsAndThinsSamples) {
  const SPSystem s = decay(1.0);
  ArcObserver obs;
  obs.record_samples = false;
  obs.on_sample = [](const HybridTime& t, const StateVector&) { return t.t < 0.5 - 1e-12; };
  const HybridArc arc = simulate_arc(s, StateVector(v1(1.0), v1(-1.0)), RandomStream(), config(0.01, 5.0), &obs);
  EXPECT_EQ(arc.termination, Termination::observer_stop);
  EXPECT_NEAR(arc.end_time().t, 0.5, 1e-9);
  EXPECT_EQ(arc.sample_count(), 2u);
}

TEST(Simulate, InputValidation) {
  const SPSystem s = decay(1.0);
  EXPECT_THROW(simulate_arc(s, StateVector(v1(NAN), v1(0)), RandomStream(), config(0.1, 1)), std::invalid_argument);
  EXPECT_THROW(simulate_arc(s, StateVector(Vector::Zero(2), v1(0)), RandomStream(), config(0.1, 1)),
               std::invalid_argument);
  EXPECT_THROW(simulate_arc(s, StateVector(v1(0), v1(0)), RandomStream(), config(0.0, 1)), std::invalid_argument);
  SimConfig c = config(0.1, 1);
  c.flow_selection = SelectionPolicy::fixed(2.0);
  EXPECT_THROW(c.validate(), std::invalid_argument);
  RandomStream rs;
  EXPECT_THROW(execute_jump(timer(), StateVector(v1(0.5), Vector(0)), rs, c), std::invalid_argument);
}

TEST(Simulate, DeterministicUnderSeedAndRandomSelections) {
  SimConfig c = config(0.05, 20.0);
  c.flow_selection = SelectionPolicy::random();
  const SPSystem s = timer();
  const HybridArc a = simulate_arc(s, StateVector(v1(0.0), Vector(0)), RandomStream(9, 2), c);
  const HybridArc b = simulate_arc(s, StateVector(v1(0.0), Vector(0)), RandomStream(9, 2), c);
  ASSERT_EQ(a.jumps.size(), b.jumps.size());
  for (std::size_t k = 0; k < a.jumps.size(); ++k) {
    EXPECT_EQ(a.jumps[k].v, b.jumps[k].v);
    EXPECT_EQ(a.jumps[k].selection, b.jumps[k].selection);
  }
  EXPECT_EQ(a.flow_lambda, b.flow_lambda);
  EXPECT_EQ(a.flow_lambda, resolve_flow_lambda(c, RandomStream(9, 2)));
  const HybridArc other = simulate_arc(s, StateVector(v1(0.0), Vector(0)), RandomStream(10, 2), c);
  bool differs = false;
  for (std::size_t k = 0; k < std::min(a.jumps.size(), other.jumps.size()); ++k)
    differs |= a.jumps[k].v != other.jumps[k].v;
  EXPECT_TRUE(differs);
}
