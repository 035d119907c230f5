#include <gtest/gtest.h>

#include <cmath>

#include "shds/system.hpp"

using namespace shds;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

// x' = -x + lambda, eps z' = -(z + 2x); D = {x = 3}, G = (0, z).
SPSystem toy(double eps = 0.1) {
  SPSystem s;
  s.name = "toy";
  s.n_x = 1;
  s.n_z = 1;
  s.epsilon = eps;
  s.flow_set = SetPredicate::product([](const Vector& x) { return interval_membership(x[0], -5, 5); }, {});
  s.jump_set = SetPredicate([](const StateVector& y) { return std::abs(y.x[0] - 3.0); });
  s.flow_x = {[](const StateVector& y, double lambda) { return Vector(v1(-y.x[0] + lambda)); }, true};
  s.flow_z = {[](const StateVector& y, double) { return Vector(-(y.z + 2.0 * y.x)); }, false};
  s.jump_map = {[](const StateVector& y, const Vector& v, double) { return StateVector(v1(v[0]), y.z); }, false};
  s.measure = JumpMeasure::discrete_scalar({0.0, 1.0}, {0.5, 0.5});
  s.manifold = Manifold::affine(Matrix::Constant(1, 1, -2.0), Vector::Zero(1));
  return s;
}

}  // namespace

TEST(LambdaGrid, EndpointsIncluded) {
  EXPECT_EQ(lambda_grid(1), std::vector<double>{1.0});
  const auto g = lambda_grid(5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_DOUBLE_EQ(g[2], 0.5);
}

TEST(FlowMap, EnumerateSetValuedAndSingleValued) {
  const SPSystem s = toy();
  const StateVector y(v1(1.0), v1(0.0));
  const auto sel = s.flow_x.enumerate(y, 3);
  ASSERT_EQ(sel.size(), 3u);
  EXPECT_DOUBLE_EQ(sel[0][0], -1.0);
  EXPECT_DOUBLE_EQ(sel[2][0], 0.0);
  EXPECT_EQ(s.flow_z.enumerate(y, 7).size(), 1u);
}

TEST(SPSystem, DerivativeScalesFastState) {
  const SPSystem s = toy(0.25);
  StateVector d;
  s.derivative(StateVector(v1(1.0), v1(1.0)), 1.0, d);
  EXPECT_DOUBLE_EQ(d.x[0], 0.0);
  EXPECT_DOUBLE_EQ(d.z[0], -3.0 / 0.25);
}

TEST(SPSystem, ValidateRejectsBrokenDefinitions) {
  SPSystem s = toy();
  s.epsilon = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = toy();
  s.flow_z.eval = nullptr;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = toy();
  s.manifold = Manifold::affine(Matrix::Zero(2, 1), Vector::Zero(2));
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Manifold, AffineDistanceAndProjection) {
  const Manifold m = Manifold::affine(Matrix::Constant(1, 1, -2.0), Vector::Zero(1));
  EXPECT_DOUBLE_EQ(m.distance(v1(1.0), v1(1.0)), 3.0);
  EXPECT_DOUBLE_EQ(m.project(v1(1.0), v1(1.0))[0], -2.0);
  ASSERT_EQ(m.points(v1(1.5)).size(), 1u);
  EXPECT_DOUBLE_EQ(m.points(v1(1.5))[0][0], -3.0);
}

TEST(Manifold, PartialIgnoresFreeComponents) {
  Matrix sel(1, 2);
  sel << 1, 0;
  const Manifold m = Manifold::partial(sel, Matrix::Constant(1, 1, 1.0), Vector::Zero(1), [](const Vector&) {
    return std::vector<Vector>{(Vector(2) << 0, 1).finished(), (Vector(2) << 0, 2).finished()};
  });
  const Vector z = (Vector(2) << 4.0, 100.0).finished();
  EXPECT_DOUBLE_EQ(m.distance(v1(1.0), z), 3.0);
  const auto pts = m.points(v1(1.0));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_DOUBLE_EQ(pts[1][0], 1.0);
  EXPECT_DOUBLE_EQ(pts[1][1], 2.0);
  EXPECT_DOUBLE_EQ(m.project(v1(1.0), z)[1], 100.0);
}

TEST(Manifold, GenericRequiresDistance) {
  EXPECT_THROW(Manifold::generic({}, {}), std::invalid_argument);
  const Manifold g = Manifold::generic({}, [](const Vector&, const Vector& z) { return z.norm(); });
  EXPECT_THROW(g.project(v1(0), v1(0)), std::logic_error);
}

TEST(Reduced, FlowOnManifoldAndJumpOutputs) {
  const SPSystem s = toy();
  const ReducedSystem r = build_reduced(s, 1, 3);
  const auto f = r.flow(v1(2.0));
  ASSERT_EQ(f.size(), 3u);  // one centroid per lambda
  EXPECT_DOUBLE_EQ(f[0][0], -2.0);
  EXPECT_DOUBLE_EQ(f[2][0], -1.0);
  EXPECT_DOUBLE_EQ(r.selection(v1(2.0), 0.5)[0], -1.5);
  EXPECT_LE(r.jump_membership(v1(3.0)), 0.0);
  const auto g = r.jump(v1(3.0), v1(1.0));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0][0], 1.0);
  EXPECT_THROW(build_reduced(s, 0), std::invalid_argument);
}

TEST(Reduced, DomainErrorNamesThePoint) {
  SPSystem s = toy();
  s.manifold = Manifold::generic([](const Vector&) { return std::vector<Vector>{}; },
                                 [](const Vector&, const Vector&) { return 0.0; });
  const ReducedSystem r = build_reduced(s, 1);
  try {
    r.flow(v1(0.5));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos);
  }
}

TEST(Reduced, AsSystemHasNoFastState) {
  const SPSystem s = reduced_as_system(build_reduced(toy(), 1), "toy_reduced");
  EXPECT_EQ(s.n_z, 0);
  StateVector d;
  s.derivative(StateVector(v1(2.0), Vector(0)), 1.0, d);
  EXPECT_DOUBLE_EQ(d.x[0], -1.0);
  EXPECT_TRUE(s.jump_set.contains(StateVector(v1(3.0), Vector(0))));
}
