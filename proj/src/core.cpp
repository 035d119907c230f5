#include "shds/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace shds {

bool precedes(const HybridTime& a, const HybridTime& b) {
  return a.total() <= b.total() && a.t <= b.t && a.j <= b.j;
}

Vector StateVector::stacked() const {
  Vector y(x.size() + z.size());
  y << x, z;
  return y;
}

bool StateVector::all_finite() const { return x.allFinite() && z.allFinite(); }

StateVector StateVector::split(const Eigen::Ref<const Vector>& y, Index n_x) {
  return StateVector(y.head(n_x), y.tail(y.size() - n_x));
}

SetPredicate::SetPredicate()
    : membership_([](const StateVector&) { return -1.0; }) {}

SetPredicate::SetPredicate(Function membership, Function crossing, double tolerance)
    : membership_(std::move(membership)), crossing_(std::move(crossing)), tolerance_(tolerance) {}

SetPredicate SetPredicate::everything() { return SetPredicate(); }

SetPredicate SetPredicate::nothing() {
  SetPredicate s([](const StateVector&) { return std::numeric_limits<double>::infinity(); });
  s.empty_ = true;
  return s;
}

SetPredicate SetPredicate::product(PartFunction x_part, PartFunction z_part, Function crossing,
                                   double tolerance) {
  auto m = [x_part = std::move(x_part), z_part = std::move(z_part)](const StateVector& y) {
    const double mx = x_part ? x_part(y.x) : -1.0;
    const double mz = z_part ? z_part(y.z) : -1.0;
    return std::max(mx, mz);
  };
  return SetPredicate(std::move(m), std::move(crossing), tolerance);
}

double SetPredicate::membership(const StateVector& y) const { return membership_(y); }

double SetPredicate::crossing(const StateVector& y) const {
  return crossing_ ? crossing_(y) : membership_(y);
}

double interval_membership(double value, double lo, double hi) {
  return std::max(lo - value, value - hi);
}

double lattice_membership(double value, const std::vector<double>& points) {
  double best = std::numeric_limits<double>::infinity();
  for (double p : points) best = std::min(best, std::abs(value - p));
  return best;
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << "]";
  return os.str();
}

}  // namespace shds
