#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shds/core.hpp"
#include "shds/random.hpp"

namespace shds {

// Probability measure for the jump randomness v.
class JumpMeasure {
 public:
  enum class Kind { discrete, uniform_interval, truncated_exponential, uniform_ball, product };

  JumpMeasure();  // point mass at the empty vector

  static JumpMeasure discrete(std::vector<Vector> points, std::vector<double> weights);
  static JumpMeasure discrete_scalar(const std::vector<double>& points,
                                     std::vector<double> weights);
  static JumpMeasure uniform_interval(double a, double b);
  // Density e^{-(T-v)} / (1 - e^{-T}) on [0, T].
  static JumpMeasure truncated_exponential(double T);
  static JumpMeasure uniform_ball(double radius, int dimension);
  static JumpMeasure product(std::vector<JumpMeasure> components);

  Kind kind() const { return kind_; }
  int dimension() const;
  void validate() const;

  const std::vector<Vector>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  double lower() const { return a_; }
  double upper() const { return b_; }
  double radius() const { return radius_; }
  const std::vector<JumpMeasure>& components() const { return components_; }

  // One logical draw, using as many sub-uniforms as needed.
  Vector sample_from(Draw& draw) const;
  // Density of a one-dimensional absolutely continuous measure.
  double density(double v) const;
  bool is_one_dimensional_continuous() const;

  std::string kind_name() const;
  static Kind parse_kind(const std::string& name);

 private:
  Kind kind_ = Kind::discrete;
  std::vector<Vector> points_;
  std::vector<double> weights_;
  double a_ = 0.0;
  double b_ = 0.0;
  double radius_ = 0.0;
  int ball_dim_ = 0;
  std::vector<JumpMeasure> components_;
};

// Draws v ~ mu and advances the stream by one logical draw.
Vector sample(const JumpMeasure& measure, RandomStream& stream);

struct ExpectationMethod {
  enum class Kind { automatic, exact_discrete, quadrature, monte_carlo };
  Kind kind = Kind::automatic;
  int nodes = 64;
  long samples = 100000;
  RandomStream stream{};

  static ExpectationMethod automatic() { return {}; }
  static ExpectationMethod exact_discrete() { return {Kind::exact_discrete}; }
  static ExpectationMethod quadrature(int n = 64) {
    ExpectationMethod m{Kind::quadrature};
    m.nodes = n;
    return m;
  }
  static ExpectationMethod monte_carlo(long n, RandomStream s) {
    ExpectationMethod m{Kind::monte_carlo};
    m.samples = n;
    m.stream = s;
    return m;
  }
};

// Weighted nodes representing a measure (exact for discrete parts,
// Gauss-Legendre for 1-D continuous parts, with n nodes per panel on the
// geometric panels of the truncated exponential, samples for Monte Carlo).
struct MeasureRule {
  std::vector<Vector> nodes;
  std::vector<double> weights;

  double apply(const std::function<double(const Vector&)>& f) const;
};

// Throws std::invalid_argument on method/measure mismatch.
MeasureRule make_rule(const JumpMeasure& measure, const ExpectationMethod& method);

double expectation(const JumpMeasure& measure,
                   const std::function<double(const Vector&)>& integrand,
                   const ExpectationMethod& method = ExpectationMethod::automatic());

// Closed-form moments of the truncated exponential on [0, T].
double truncated_exponential_mean(double T);
double truncated_exponential_second_moment(double T);

}  // namespace shds
