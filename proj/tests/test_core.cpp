#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "shds/core.hpp"

using namespace shds;

TEST(HybridTime, OrderAndTotal) {
  const HybridTime a{0.5, 1}, b{0.7, 2};
  EXPECT_DOUBLE_EQ(b.total(), 2.7);
  EXPECT_TRUE(precedes(a, b));
  EXPECT_FALSE(precedes(b, a));
  EXPECT_TRUE(precedes(a, a));
}

TEST(StateVector, StackAndSplitRoundTrip) {
  StateVector y(Vector::LinSpaced(3, 1, 3), Vector::Constant(2, -1.0));
  EXPECT_EQ(y.dimension(), 5);
  const StateVector back = StateVector::split(y.stacked(), 3);
  EXPECT_EQ(back.x, y.x);
  EXPECT_EQ(back.z, y.z);
  EXPECT_TRUE(y.all_finite());
  y.z[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(y.all_finite());
}

TEST(SetPredicate, EverythingAndNothing) {
  const StateVector y(Vector::Zero(1), Vector::Zero(1));
  EXPECT_TRUE(SetPredicate::everything().contains(y));
  EXPECT_FALSE(SetPredicate::nothing().contains(y));
  EXPECT_TRUE(SetPredicate::nothing().empty());
}

TEST(SetPredicate, ProductTakesMaxAndHonoursTolerance) {
  const auto s = SetPredicate::product([](const Vector& x) { return interval_membership(x[0], 0, 1); },
                                       [](const Vector& z) { return interval_membership(z[0], -1, 1); });
  EXPECT_TRUE(s.contains({Vector::Constant(1, 0.5), Vector::Constant(1, 0.0)}));
  EXPECT_TRUE(s.contains({Vector::Constant(1, 1.0 + 5e-10), Vector::Constant(1, 0.0)}));
  EXPECT_FALSE(s.contains({Vector::Constant(1, 1.0 + 1e-6), Vector::Constant(1, 0.0)}));
  EXPECT_NEAR(s.membership({Vector::Constant(1, 0.5), Vector::Constant(1, 3.0)}), 2.0, 1e-15);
  // Without a crossing function the membership is used.
  EXPECT_EQ(s.crossing({Vector::Constant(1, 2.0), Vector::Constant(1, 0.0)}), 1.0);
}

TEST(Membership, LatticeDistance) {
  EXPECT_DOUBLE_EQ(lattice_membership(0.3, {0.0, 1.0}), 0.3);
  EXPECT_NEAR(lattice_membership(0.8, {0.0, 1.0}), 0.2, 1e-15);
  EXPECT_EQ(lattice_membership(5.0, {}), std::numeric_limits<double>::infinity());
}

TEST(Format, VectorPrintsFullPrecision) {
  EXPECT_EQ(format_vector((Vector(2) << 0.1, -2).finished()), "[0.10000000000000001, -2]");
}
