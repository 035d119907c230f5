#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace shds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Absolute tolerance for set membership.
inline constexpr double kSetTolerance = 1e-9;

struct HybridTime {
  double t = 0.0;
  int j = 0;

  double total() const { return t + static_cast<double>(j); }
};

// (a) precedes (b) in the hybrid time order.
bool precedes(const HybridTime& a, const HybridTime& b);

struct StateVector {
  Vector x;
  Vector z;

  StateVector() = default;
  StateVector(Vector x_in, Vector z_in) : x(std::move(x_in)), z(std::move(z_in)) {}

  Index dimension() const { return x.size() + z.size(); }
  Vector stacked() const;
  bool all_finite() const;
  static StateVector split(const Eigen::Ref<const Vector>& y, Index n_x);
};

// Signed membership: nonpositive inside, positive outside. A point is in the
// set iff membership <= tolerance. The optional crossing function is a signed
// function that changes sign where flows enter the set; event detection uses it
// for sets with empty interior (timer resets, integer lattices).
class SetPredicate {
 public:
  using Function = std::function<double(const StateVector&)>;
  using PartFunction = std::function<double(const Vector&)>;

  SetPredicate();
  explicit SetPredicate(Function membership, Function crossing = {},
                        double tolerance = kSetTolerance);

  static SetPredicate everything();
  static SetPredicate nothing();
  // C_x x C_z with membership max(m_x(x), m_z(z)).
  static SetPredicate product(PartFunction x_part, PartFunction z_part,
                              Function crossing = {},
                              double tolerance = kSetTolerance);

  double membership(const StateVector& y) const;
  double crossing(const StateVector& y) const;
  bool contains(const StateVector& y) const {
    return membership(y) <= tolerance_;
  }
  bool has_crossing() const { return static_cast<bool>(crossing_); }
  double tolerance() const { return tolerance_; }
  bool empty() const { return empty_; }

 private:
  Function membership_;
  Function crossing_;
  double tolerance_ = kSetTolerance;
  bool empty_ = false;
};

// Helpers for building membership functions.
double interval_membership(double value, double lo, double hi);
double lattice_membership(double value, const std::vector<double>& points);

std::string format_vector(const Vector& v);

}  // namespace shds
