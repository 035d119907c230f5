#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shds/core.hpp"
#include "shds/measure.hpp"
#include "shds/simulate.hpp"
#include "shds/system.hpp"

namespace shds {

inline constexpr double kInequalityTolerance = 1e-8;  // tol_ineq

using FunctionX = std::function<double(const Vector&)>;
using GradientX = std::function<Vector(const Vector&)>;
using FunctionY = std::function<double(const StateVector&)>;
using GradientY = std::function<Vector(const StateVector&)>;
using Comparison = std::function<double(double)>;

struct CertificateData {
  FunctionX V;
  GradientX V_grad;  // optional, finite differences otherwise
  FunctionY W;
  GradientY W_grad_x;  // optional
  GradientY W_grad_z;  // optional
  FunctionY manifold_distance;  // |z|_M(x)

  FunctionX phi_x;
  Comparison phi_z;
  Comparison alpha1, alpha2, alpha3, alpha4;
  FunctionX rho_x, rho5;
  Comparison rho_z, rho6;
  FunctionX varpi;   // initial-condition gauge; dist_A when empty
  FunctionX dist_A;  // |x|_A
  std::function<bool(const Vector&)> in_Ox;  // open recurrence set O_x

  double chi = 1.0;
  double nu = 0.0;
  // Components held constant by the flows (mode indices); skipped by
  // finite-difference checks.
  std::vector<Index> discrete_x;
  std::vector<Index> discrete_z;

  bool in_O_chi(const StateVector& y) const;
};

struct ConstantsLedger {
  double k_x = 0, k_z = 0, c_x = 0, c_z = 0;
  double k1 = 0, k2 = 0, k3 = 0, k4 = 0, k5 = 0, k6 = 0;
  std::optional<double> epsilon_star_override;
  std::map<std::string, std::string> notes;
};

double composite_value(const CertificateData& cert, double theta, const StateVector& y);
double theta_star(const ConstantsLedger& ledger);
// Printed threshold k_x k_z / (2 (k2 k_x + k1 k_x)) unless overridden.
double epsilon_star(const ConstantsLedger& ledger);

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& at);
Vector gradient_V(const CertificateData& cert, const Vector& x);
Vector gradient_W_x(const CertificateData& cert, const StateVector& y);
Vector gradient_W_z(const CertificateData& cert, const StateVector& y);

struct InequalityResult {
  std::string name;
  double max_residual = -std::numeric_limits<double>::infinity();
  double min_residual = std::numeric_limits<double>::infinity();
  StateVector worst_point;
  long evaluated = 0;
  bool pass = true;

  void record(double residual, const StateVector& y);
};

struct VerificationReport {
  std::string kind;
  std::string mode;
  std::string grid_spec;
  double tolerance = kInequalityTolerance;
  long grid_points = 0;
  long skipped = 0;
  std::vector<InequalityResult> inequalities;
  std::vector<std::string> notes;
  std::string branch;  // relaxed jump mode: which alternative was checked

  bool pass() const;
  // Finds or appends. References stay valid while fewer than 16 entries exist.
  InequalityResult& entry(const std::string& name);
  const InequalityResult* find(const std::string& name) const;
  const InequalityResult* worst() const;
  void finalize();
};

enum class FlowMode { strict, nonstrict, recurrence };
enum class JumpMode { thm1, thm2_relaxed, thm3, thm4 };

std::string to_string(FlowMode m);
std::string to_string(JumpMode m);
FlowMode parse_flow_mode(const std::string& s);
JumpMode parse_jump_mode(const std::string& s);

struct FlowVerifyOptions {
  int selection_grid = 11;
  int hull_samples = 1;
  double tolerance = kInequalityTolerance;
  std::string grid_spec;
};

// Pointwise fast decrease, reduced decrease and the two interconnection bounds.
VerificationReport verify_flow_decrease(const SPSystem& system, const CertificateData& cert,
                                        const ConstantsLedger& ledger, double theta,
                                        const std::vector<StateVector>& grid, FlowMode mode,
                                        const FlowVerifyOptions& options = {});

struct JumpVerifyOptions {
  FunctionY rho_hat;            // thm1 / thm3
  std::optional<double> nu;     // thm3; cert.nu otherwise
  ExpectationMethod method = ExpectationMethod::automatic();
  int parameter_grid = 101;
  double tolerance = kInequalityTolerance;
  std::string grid_spec;
};

// Expectation over mu of the sup of E_theta over the enumerated jump outputs.
// With restrict_outside set, outputs inside O_chi do not contribute (empty sup
// counts as 0).
double jump_expectation_sup(const SPSystem& system, const CertificateData& cert, double theta,
                            const StateVector& y, const MeasureRule& rule, int parameter_grid,
                            bool restrict_outside = false);

VerificationReport verify_jump_decrease(const SPSystem& system, const CertificateData& cert,
                                        const ConstantsLedger& ledger, double theta,
                                        const std::vector<StateVector>& grid, JumpMode mode,
                                        const JumpVerifyOptions& options = {});

// alpha1(|z|_M) <= W <= alpha2(|z|_M), alpha3(|x|_A) <= V <= alpha4(varpi(x)).
VerificationReport verify_sandwich(const CertificateData& cert,
                                   const std::vector<StateVector>& grid,
                                   double tolerance = 1e-9);

// Largest relative error between analytic and central-difference gradients.
double gradient_consistency(const CertificateData& cert, const std::vector<StateVector>& points);

struct MonitorTrace {
  std::vector<double> t;
  std::vector<int> j;
  std::vector<double> value;
  std::vector<double> flow_increments;
  std::vector<double> jump_increments;
  std::vector<std::size_t> flagged;  // indices into flow_increments
  double tolerance = 0.0;

  std::size_t flag_count() const { return flagged.size(); }
};

// E_theta along the arc; a flow step is flagged when E_theta grows by more than
// 1e-6 * step_h and the step starts outside O_chi.
MonitorTrace monitor_along_arc(const CertificateData& cert, double theta, const HybridArc& arc,
                               double step_h);

}  // namespace shds
