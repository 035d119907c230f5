#include "shds/measure.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shds/quadrature.hpp"

namespace shds {

JumpMeasure::JumpMeasure() {
  points_.push_back(Vector(0));
  weights_.push_back(1.0);
}

JumpMeasure JumpMeasure::discrete(std::vector<Vector> points, std::vector<double> weights) {
  JumpMeasure m;
  m.kind_ = Kind::discrete;
  m.points_ = std::move(points);
  m.weights_ = std::move(weights);
  m.validate();
  return m;
}

JumpMeasure JumpMeasure::discrete_scalar(const std::vector<double>& points,
                                         std::vector<double> weights) {
  std::vector<Vector> pts;
  pts.reserve(points.size());
  for (double p : points) pts.push_back(Vector::Constant(1, p));
  return discrete(std::move(pts), std::move(weights));
}

JumpMeasure JumpMeasure::uniform_interval(double a, double b) {
  JumpMeasure m;
  m.kind_ = Kind::uniform_interval;
  m.points_.clear();
  m.weights_.clear();
  m.a_ = a;
  m.b_ = b;
  m.validate();
  return m;
}

JumpMeasure JumpMeasure::truncated_exponential(double T) {
  JumpMeasure m;
  m.kind_ = Kind::truncated_exponential;
  m.points_.clear();
  m.weights_.clear();
  m.a_ = 0.0;
  m.b_ = T;
  m.validate();
  return m;
}

JumpMeasure JumpMeasure::uniform_ball(double radius, int dimension) {
  JumpMeasure m;
  m.kind_ = Kind::uniform_ball;
  m.points_.clear();
  m.weights_.clear();
  m.radius_ = radius;
  m.ball_dim_ = dimension;
  m.validate();
  return m;
}

JumpMeasure JumpMeasure::product(std::vector<JumpMeasure> components) {
  JumpMeasure m;
  m.kind_ = Kind::product;
  m.points_.clear();
  m.weights_.clear();
  m.components_ = std::move(components);
  m.validate();
  return m;
}

int JumpMeasure::dimension() const {
  switch (kind_) {
    case Kind::discrete:
      return points_.empty() ? 0 : static_cast<int>(points_.front().size());
    case Kind::uniform_interval:
    case Kind::truncated_exponential:
      return 1;
    case Kind::uniform_ball:
      return ball_dim_;
    case Kind::product: {
      int d = 0;
      for (const auto& c : components_) d += c.dimension();
      return d;
    }
  }
  return 0;
}

void JumpMeasure::validate() const {
  switch (kind_) {
    case Kind::discrete: {
      if (points_.empty() || points_.size() != weights_.size()) {
        throw std::invalid_argument("discrete measure: points and weights must match");
      }
      double total = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (!(weights_[i] >= 0.0)) throw std::invalid_argument("discrete measure: negative weight");
        if (points_[i].size() != points_.front().size()) {
          throw std::invalid_argument("discrete measure: inconsistent point dimensions");
        }
        total += weights_[i];
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("discrete measure: weights must sum to 1");
      }
      break;
    }
    case Kind::uniform_interval:
      if (!(a_ <= b_) || !std::isfinite(a_) || !std::isfinite(b_)) {
        throw std::invalid_argument("uniform_interval: requires finite a <= b");
      }
      break;
    case Kind::truncated_exponential:
      if (!(b_ > 0.0) || !std::isfinite(b_)) {
        throw std::invalid_argument("truncated_exponential: requires T > 0");
      }
      break;
    case Kind::uniform_ball:
      if (!(radius_ >= 0.0) || ball_dim_ < 1) {
        throw std::invalid_argument("uniform_ball: requires radius >= 0 and dimension >= 1");
      }
      break;
    case Kind::product:
      if (components_.empty()) throw std::invalid_argument("product measure: no components");
      for (const auto& c : components_) c.validate();
      break;
  }
}

Vector JumpMeasure::sample_from(Draw& draw) const {
  switch (kind_) {
    case Kind::discrete: {
      if (points_.size() == 1) return points_.front();
      const double u = draw.uniform();
      double acc = 0.0;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        acc += weights_[i];
        if (u < acc) return points_[i];
      }
      // Round-off in the cumulative sum: last point with positive weight.
      for (std::size_t i = points_.size(); i-- > 0;) {
        if (weights_[i] > 0.0) return points_[i];
      }
      return points_.back();
    }
    case Kind::uniform_interval: {
      if (a_ == b_) return Vector::Constant(1, a_);
      return Vector::Constant(1, a_ + (b_ - a_) * draw.uniform());
    }
    case Kind::truncated_exponential: {
      // Inverse CDF of e^{v-T} / (1 - e^{-T}).
      const double u = draw.uniform_open();
      const double v = b_ + std::log(u + (1.0 - u) * std::exp(-b_));
      return Vector::Constant(1, std::min(std::max(v, 0.0), b_));
    }
    case Kind::uniform_ball: {
      Vector dir(ball_dim_);
      double norm = 0.0;
      do {
        for (int i = 0; i < ball_dim_; ++i) dir[i] = draw.normal();
        norm = dir.norm();
      } while (norm == 0.0);
      const double r = radius_ * std::pow(draw.uniform(), 1.0 / ball_dim_);
      return dir * (r / norm);
    }
    case Kind::product: {
      Vector v(dimension());
      Index offset = 0;
      for (const auto& c : components_) {
        const Vector part = c.sample_from(draw);
        v.segment(offset, part.size()) = part;
        offset += part.size();
      }
      return v;
    }
  }
  return Vector(0);
}

double JumpMeasure::density(double v) const {
  switch (kind_) {
    case Kind::uniform_interval:
      return (v >= a_ && v <= b_ && b_ > a_) ? 1.0 / (b_ - a_) : 0.0;
    case Kind::truncated_exponential:
      return (v >= 0.0 && v <= b_) ? std::exp(v - b_) / (-std::expm1(-b_)) : 0.0;
    default:
      throw std::invalid_argument("density: measure is not one-dimensional continuous");
  }
}

bool JumpMeasure::is_one_dimensional_continuous() const {
  return (kind_ == Kind::uniform_interval && b_ > a_) || kind_ == Kind::truncated_exponential;
}

std::string JumpMeasure::kind_name() const {
  switch (kind_) {
    case Kind::discrete: return "discrete";
    case Kind::uniform_interval: return "uniform_interval";
    case Kind::truncated_exponential: return "truncated_exponential";
    case Kind::uniform_ball: return "uniform_ball";
    case Kind::product: return "product";
  }
  return "unknown";
}

JumpMeasure::Kind JumpMeasure::parse_kind(const std::string& name) {
  if (name == "discrete") return Kind::discrete;
  if (name == "uniform_interval") return Kind::uniform_interval;
  if (name == "truncated_exponential") return Kind::truncated_exponential;
  if (name == "uniform_ball") return Kind::uniform_ball;
  if (name == "product") return Kind::product;
  throw std::invalid_argument("unknown measure kind: " + name);
}

Vector sample(const JumpMeasure& measure, RandomStream& stream) {
  Draw draw = stream.next();
  return measure.sample_from(draw);
}

double MeasureRule::apply(const std::function<double(const Vector&)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (weights[i] != 0.0) acc += weights[i] * f(nodes[i]);
  }
  return acc;
}

namespace {

bool all_discrete(const JumpMeasure& m) {
  using K = JumpMeasure::Kind;
  if (m.kind() == K::discrete) return true;
  if (m.kind() == K::uniform_interval && m.lower() == m.upper()) return true;
  if (m.kind() == K::product) {
    for (const auto& c : m.components())
      if (!all_discrete(c)) return false;
    return true;
  }
  return false;
}

bool quadrature_compatible(const JumpMeasure& m) {
  using K = JumpMeasure::Kind;
  if (all_discrete(m) || m.is_one_dimensional_continuous()) return true;
  if (m.kind() == K::product) {
    for (const auto& c : m.components())
      if (!quadrature_compatible(c)) return false;
    return true;
  }
  return false;
}

MeasureRule tensor_rule(const JumpMeasure& m, int nodes) {
  using K = JumpMeasure::Kind;
  MeasureRule rule;
  switch (m.kind()) {
    case K::discrete:
      rule.nodes = m.points();
      rule.weights = m.weights();
      return rule;
    case K::truncated_exponential: {
      // The density is concentrated within a few units of T. Panels in the
      // distance s = T - v double in width: [0,1], [1,2], [2,4], ... , [.., T].
      const double T = m.upper();
      double s0 = 0.0;
      double width = 1.0;
      while (s0 < T) {
        const double s1 = std::min(T, s0 + width);
        const auto gl = gauss_legendre<double>(nodes, T - s1, T - s0);
        for (int i = 0; i < nodes; ++i) {
          rule.nodes.push_back(Vector::Constant(1, gl.nodes[i]));
          rule.weights.push_back(gl.weights[i] * m.density(gl.nodes[i]));
        }
        s0 = s1;
        width = s0;
      }
      return rule;
    }
    case K::uniform_interval: {
      if (m.lower() == m.upper()) {
        rule.nodes.push_back(Vector::Constant(1, m.lower()));
        rule.weights.push_back(1.0);
        return rule;
      }
      const auto gl = gauss_legendre<double>(nodes, m.lower(), m.upper());
      for (int i = 0; i < nodes; ++i) {
        rule.nodes.push_back(Vector::Constant(1, gl.nodes[i]));
        rule.weights.push_back(gl.weights[i] * m.density(gl.nodes[i]));
      }
      return rule;
    }
    case K::product: {
      rule.nodes.push_back(Vector(0));
      rule.weights.push_back(1.0);
      for (const auto& c : m.components()) {
        const MeasureRule part = tensor_rule(c, nodes);
        MeasureRule next;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          for (std::size_t k = 0; k < part.nodes.size(); ++k) {
            Vector v(rule.nodes[i].size() + part.nodes[k].size());
            v << rule.nodes[i], part.nodes[k];
            next.nodes.push_back(std::move(v));
            next.weights.push_back(rule.weights[i] * part.weights[k]);
          }
        }
        rule = std::move(next);
      }
      return rule;
    }
    case K::uniform_ball:
      break;
  }
  throw std::invalid_argument("quadrature: measure has a multivariate continuous component");
}

}  // namespace

MeasureRule make_rule(const JumpMeasure& measure, const ExpectationMethod& method) {
  using MK = ExpectationMethod::Kind;
  switch (method.kind) {
    case MK::exact_discrete:
      if (!all_discrete(measure)) {
        throw std::invalid_argument("exact_discrete expectation requires a discrete measure, got " +
                                    measure.kind_name());
      }
      return tensor_rule(measure, 1);
    case MK::quadrature:
      if (method.nodes < 1) throw std::invalid_argument("quadrature: n_nodes must be >= 1");
      if (!quadrature_compatible(measure)) {
        throw std::invalid_argument(
            "quadrature expectation requires one-dimensional continuous components, got " +
            measure.kind_name());
      }
      return tensor_rule(measure, method.nodes);
    case MK::monte_carlo: {
      if (method.samples < 1) throw std::invalid_argument("monte_carlo: n must be >= 1");
      MeasureRule rule;
      RandomStream stream = method.stream;
      rule.nodes.reserve(method.samples);
      for (long i = 0; i < method.samples; ++i) rule.nodes.push_back(sample(measure, stream));
      rule.weights.assign(method.samples, 1.0 / static_cast<double>(method.samples));
      return rule;
    }
    case MK::automatic:
      if (all_discrete(measure)) return tensor_rule(measure, 1);
      if (quadrature_compatible(measure)) return tensor_rule(measure, method.nodes);
      return make_rule(measure, ExpectationMethod::monte_carlo(method.samples, method.stream));
  }
  throw std::invalid_argument("unknown expectation method");
}

double expectation(const JumpMeasure& measure,
                   const std::function<double(const Vector&)>& integrand,
                   const ExpectationMethod& method) {
  return make_rule(measure, method).apply(integrand);
}

double truncated_exponential_mean(double T) {
  return (T - 1.0 + std::exp(-T)) / (-std::expm1(-T));
}

double truncated_exponential_second_moment(double T) {
  return (T * T - 2.0 * T + 2.0 - 2.0 * std::exp(-T)) / (-std::expm1(-T));
}

}  // namespace shds
