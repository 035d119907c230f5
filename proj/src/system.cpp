#include "shds/system.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shds {

std::vector<double> lambda_grid(int n) {
  if (n <= 1) return {1.0};
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return grid;
}

std::vector<Vector> FlowMap::enumerate(const StateVector& y, int n) const {
  if (!set_valued) return {eval(y, 1.0)};
  std::vector<Vector> out;
  for (double lambda : lambda_grid(n)) out.push_back(eval(y, lambda));
  return out;
}

std::vector<StateVector> JumpMap::enumerate(const StateVector& y, const Vector& v, int n) const {
  if (!set_valued) return {eval(y, v, 1.0)};
  std::vector<StateVector> out;
  for (double lambda : lambda_grid(n)) out.push_back(eval(y, v, lambda));
  return out;
}

Manifold Manifold::affine(Matrix gain, Vector offset) {
  Manifold m;
  m.selector = Matrix::Identity(gain.rows(), gain.rows());
  m.gain = std::move(gain);
  m.offset = std::move(offset);
  return m;
}

Manifold Manifold::partial(Matrix selector, Matrix gain, Vector offset,
                           std::function<std::vector<Vector>(const Vector& x)> free_parts) {
  Manifold m;
  m.selector = std::move(selector);
  m.gain = std::move(gain);
  m.offset = std::move(offset);
  m.free_parts = std::move(free_parts);
  return m;
}

Manifold Manifold::generic(std::function<std::vector<Vector>(const Vector& x)> points,
                           std::function<double(const Vector& x, const Vector& z)> distance) {
  if (!distance) throw std::invalid_argument("generic manifold requires a distance function");
  Manifold m;
  m.generic_points = std::move(points);
  m.generic_distance = std::move(distance);
  return m;
}

std::vector<Vector> Manifold::points(const Vector& x) const {
  if (generic_points) return generic_points(x);
  const Vector constrained = gain * x + offset;
  const Vector base = selector.transpose() * constrained;
  if (!free_parts) return {base};
  std::vector<Vector> out;
  for (const Vector& w : free_parts(x)) out.push_back(base + w);
  return out;
}

double Manifold::distance(const Vector& x, const Vector& z) const {
  if (generic_distance) return generic_distance(x, z);
  if (selector.rows() == 0) return 0.0;
  return (selector * z - gain * x - offset).norm();
}

Vector Manifold::project(const Vector& x, const Vector& z) const {
  if (!is_affine()) throw std::logic_error("project: manifold is not affine");
  return z - selector.transpose() * (selector * z - gain * x - offset);
}

void SPSystem::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("SPSystem: epsilon must be positive");
  if (!flow_x.eval) throw std::invalid_argument("SPSystem: flow_x missing");
  if (n_z > 0 && !flow_z.eval) throw std::invalid_argument("SPSystem: flow_z missing");
  if (!jump_set.empty() && !jump_map.eval) throw std::invalid_argument("SPSystem: jump map missing");
  measure.validate();
  if (manifold.is_affine() && n_z > 0) {
    if (manifold.selector.cols() != n_z || manifold.gain.cols() != n_x ||
        manifold.gain.rows() != manifold.selector.rows() ||
        manifold.offset.size() != manifold.gain.rows()) {
      throw std::invalid_argument("SPSystem: manifold dimensions do not match the state");
    }
  }
}

void SPSystem::derivative(const StateVector& y, double lambda, StateVector& out) const {
  out.x = flow_x.eval(y, lambda);
  if (n_z > 0) {
    out.z = flow_z.eval(y, lambda) / epsilon;
  } else {
    out.z.resize(0);
  }
}

double manifold_distance(const SPSystem& system, const StateVector& y) {
  if (system.n_z == 0) return 0.0;
  return system.manifold.distance(y.x, y.z);
}

namespace {

std::vector<Vector> manifold_points_checked(const SPSystem& system, const Vector& x,
                                            int hull_samples) {
  std::vector<Vector> pts;
  if (system.n_z == 0) {
    pts.push_back(Vector(0));
    return pts;
  }
  try {
    pts = system.manifold.points(x);
  } catch (const std::exception& e) {
    throw std::domain_error("manifold evaluation failed at x = " + format_vector(x) + ": " +
                            e.what());
  }
  if (pts.empty()) {
    throw std::domain_error("manifold is empty at x = " + format_vector(x));
  }
  for (const Vector& p : pts) {
    if (p.size() != system.n_z || !p.allFinite()) {
      throw std::domain_error("manifold evaluation failed at x = " + format_vector(x));
    }
  }
  if (static_cast<int>(pts.size()) > hull_samples) {
    std::vector<Vector> chosen;
    const double stride = static_cast<double>(pts.size() - 1) / std::max(1, hull_samples - 1);
    for (int i = 0; i < hull_samples; ++i) {
      chosen.push_back(pts[static_cast<std::size_t>(std::lround(i * stride))]);
    }
    pts = std::move(chosen);
  }
  return pts;
}

}  // namespace

ReducedSystem build_reduced(const SPSystem& system, int hull_samples, int selection_grid) {
  if (hull_samples < 1) throw std::invalid_argument("build_reduced: hull_samples must be >= 1");
  system.validate();
  ReducedSystem r;
  r.n_x = system.n_x;
  r.measure = system.measure;
  r.flow_set_valued = system.flow_x.set_valued;

  // C = C_x x C_z and M(x) in C_z: x-membership is read at a manifold point.
  r.flow_membership = [system, hull_samples](const Vector& x) {
    const auto pts = manifold_points_checked(system, x, hull_samples);
    return system.flow_set.membership(StateVector(x, pts.front()));
  };
  r.jump_membership = [system, hull_samples](const Vector& x) {
    const auto pts = manifold_points_checked(system, x, hull_samples);
    double best = system.jump_set.membership(StateVector(x, pts.front()));
    for (const Vector& p : pts) best = std::min(best, system.jump_set.membership(StateVector(x, p)));
    return best;
  };
  r.jump_crossing = [system, hull_samples](const Vector& x) {
    const auto pts = manifold_points_checked(system, x, hull_samples);
    return system.jump_set.crossing(StateVector(x, pts.front()));
  };
  r.selection = [system, hull_samples](const Vector& x, double lambda) {
    const auto pts = manifold_points_checked(system, x, hull_samples);
    Vector acc = Vector::Zero(system.n_x);
    for (const Vector& p : pts) acc += system.flow_x.eval(StateVector(x, p), lambda);
    return Vector(acc / static_cast<double>(pts.size()));
  };
  r.flow = [system, hull_samples, selection_grid](const Vector& x) {
    const auto pts = manifold_points_checked(system, x, hull_samples);
    const std::vector<double> lambdas =
        system.flow_x.set_valued ? lambda_grid(selection_grid) : std::vector<double>{1.0};
    std::vector<Vector> out;
    for (double lambda : lambdas) {
      Vector centroid = Vector::Zero(system.n_x);
      for (const Vector& p : pts) {
        Vector f = system.flow_x.eval(StateVector(x, p), lambda);
        centroid += f;
        if (pts.size() > 1) out.push_back(std::move(f));
      }
      out.push_back(centroid / static_cast<double>(pts.size()));
    }
    return out;
  };
  r.jump = [system, hull_samples](const Vector& x, const Vector& v) {
    std::vector<Vector> zs;
    if (system.jump_z_grid) {
      zs = system.jump_z_grid(x);
    } else {
      zs = manifold_points_checked(system, x, hull_samples);
    }
    std::vector<Vector> out;
    for (const Vector& z : zs) {
      const StateVector y(x, z);
      for (const StateVector& g : system.jump_map.enumerate(y, v, 101)) out.push_back(g.x);
    }
    return out;
  };
  return r;
}

SPSystem reduced_as_system(const ReducedSystem& reduced, const std::string& name) {
  SPSystem s;
  s.name = name;
  s.n_x = reduced.n_x;
  s.n_z = 0;
  s.epsilon = 1.0;
  s.flow_set = SetPredicate([reduced](const StateVector& y) { return reduced.flow_membership(y.x); });
  s.jump_set = SetPredicate([reduced](const StateVector& y) { return reduced.jump_membership(y.x); },
                            [reduced](const StateVector& y) { return reduced.jump_crossing(y.x); });
  s.flow_x.eval = [reduced](const StateVector& y, double lambda) {
    return reduced.selection(y.x, lambda);
  };
  s.flow_x.set_valued = reduced.flow_set_valued;
  s.flow_z.eval = [](const StateVector&, double) { return Vector(0); };
  s.jump_map.eval = [reduced](const StateVector& y, const Vector& v, double lambda) {
    const auto outs = reduced.jump(y.x, v);
    const auto k = static_cast<std::size_t>(std::lround(lambda * static_cast<double>(outs.size() - 1)));
    return StateVector(outs[std::min(k, outs.size() - 1)], Vector(0));
  };
  s.jump_map.set_valued = true;
  s.measure = reduced.measure;
  s.manifold = Manifold::generic([](const Vector&) { return std::vector<Vector>{Vector(0)}; },
                                 [](const Vector&, const Vector&) { return 0.0; });
  return s;
}

}  // namespace shds
