#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shds/core.hpp"
#include "shds/measure.hpp"

namespace shds {

// Set-valued flow map. Selections are parameterized by lambda in [0, 1];
// single-valued maps ignore lambda.
struct FlowMap {
  std::function<Vector(const StateVector&, double lambda)> eval;
  bool set_valued = false;

  Vector operator()(const StateVector& y, double lambda) const { return eval(y, lambda); }
  // Selections on an n-point lambda grid including both endpoints.
  std::vector<Vector> enumerate(const StateVector& y, int n) const;
};

// Set-valued jump map G(x, z, v), parameterized the same way.
struct JumpMap {
  std::function<StateVector(const StateVector&, const Vector& v, double lambda)> eval;
  bool set_valued = false;

  StateVector operator()(const StateVector& y, const Vector& v, double lambda) const {
    return eval(y, v, lambda);
  }
  std::vector<StateVector> enumerate(const StateVector& y, const Vector& v, int n) const;
};

std::vector<double> lambda_grid(int n);

// Quasi-steady-state manifold. Affine form: the constrained fast components
// S z equal gain x + offset, the remaining components are free (points() adds
// representatives of them). S must have orthonormal rows. A generic form
// replaces both points() and distance() with callables.
struct Manifold {
  Matrix selector;
  Matrix gain;
  Vector offset;
  std::function<std::vector<Vector>(const Vector& x)> free_parts;

  std::function<std::vector<Vector>(const Vector& x)> generic_points;
  std::function<double(const Vector& x, const Vector& z)> generic_distance;

  static Manifold affine(Matrix gain, Vector offset);
  static Manifold partial(Matrix selector, Matrix gain, Vector offset,
                          std::function<std::vector<Vector>(const Vector& x)> free_parts);
  static Manifold generic(std::function<std::vector<Vector>(const Vector& x)> points,
                          std::function<double(const Vector& x, const Vector& z)> distance);

  bool is_affine() const { return !generic_points && !generic_distance; }
  std::vector<Vector> points(const Vector& x) const;
  double distance(const Vector& x, const Vector& z) const;
  // Nearest point of M(x) to z (affine form only).
  Vector project(const Vector& x, const Vector& z) const;
};

struct SPSystem {
  std::string name;
  Index n_x = 0;
  Index n_z = 0;
  double epsilon = 1.0;
  SetPredicate flow_set;
  SetPredicate jump_set = SetPredicate::nothing();
  FlowMap flow_x;
  FlowMap flow_z;
  JumpMap jump_map;
  JumpMeasure measure;
  Manifold manifold;
  // Fast states in D_z used when projecting jumps; defaults to M(x).
  std::function<std::vector<Vector>(const Vector& x)> jump_z_grid;

  void validate() const;
  // (f_x, f_z / epsilon) for the selection lambda.
  void derivative(const StateVector& y, double lambda, StateVector& out) const;
};

double manifold_distance(const SPSystem& system, const StateVector& y);

// Reduced system over x only.
struct ReducedSystem {
  Index n_x = 0;
  std::function<double(const Vector&)> flow_membership;
  std::function<double(const Vector&)> jump_membership;
  std::function<double(const Vector&)> jump_crossing;
  // Enumerated selections of F~(x): hull vertices and their centroid for each
  // lambda on the selection grid.
  std::function<std::vector<Vector>(const Vector& x)> flow;
  // Centroid selection for a given lambda (used for simulation).
  std::function<Vector(const Vector& x, double lambda)> selection;
  // x-components of G(x, z, v) over the D_z grid and the jump parameter grid.
  std::function<std::vector<Vector>(const Vector& x, const Vector& v)> jump;
  JumpMeasure measure;
  bool flow_set_valued = false;
};

// Throws std::domain_error naming x when M(x) cannot be evaluated.
ReducedSystem build_reduced(const SPSystem& system, int hull_samples,
                            int selection_grid = 11);

// Wraps the reduced system as a single-scale system with an empty fast state.
SPSystem reduced_as_system(const ReducedSystem& reduced, const std::string& name);

}  // namespace shds
