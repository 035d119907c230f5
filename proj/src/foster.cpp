#include "shds/foster.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shds {

bool CertificateData::in_O_chi(const StateVector& y) const {
  if (!in_Ox || !in_Ox(y.x)) return false;
  const double d = manifold_distance ? manifold_distance(y) : 0.0;
  return d < chi;
}

double composite_value(const CertificateData& cert, double theta, const StateVector& y) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("composite_value: theta must lie in [0, 1]");
  }
  return (1.0 - theta) * cert.V(y.x) + theta * cert.W(y);
}

double theta_star(const ConstantsLedger& ledger) {
  if (ledger.k1 < 0.0 || ledger.k3 < 0.0) throw std::invalid_argument("theta_star: k1, k3 must be >= 0");
  if (!(ledger.k1 + ledger.k3 > 0.0)) throw std::invalid_argument("theta_star: k1 = k3 = 0");
  return ledger.k3 / (ledger.k1 + ledger.k3);
}

double epsilon_star(const ConstantsLedger& ledger) {
  if (ledger.epsilon_star_override) return *ledger.epsilon_star_override;
  if (!(ledger.k_x > 0.0) || !(ledger.k_z > 0.0)) {
    throw std::invalid_argument("epsilon_star: k_x and k_z must be positive");
  }
  const double denom = 2.0 * (ledger.k2 * ledger.k_x + ledger.k1 * ledger.k_x);
  if (!(denom > 0.0)) throw std::invalid_argument("epsilon_star: k1 + k2 = 0 (division by zero)");
  return ledger.k_x * ledger.k_z / denom;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& at) {
  Vector g(at.size());
  Vector p = at;
  for (Index i = 0; i < at.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(at[i]));
    p[i] = at[i] + h;
    const double fp = f(p);
    p[i] = at[i] - h;
    const double fm = f(p);
    p[i] = at[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vector gradient_V(const CertificateData& cert, const Vector& x) {
  if (cert.V_grad) return cert.V_grad(x);
  return finite_difference_gradient(cert.V, x);
}

Vector gradient_W_x(const CertificateData& cert, const StateVector& y) {
  if (cert.W_grad_x) return cert.W_grad_x(y);
  return finite_difference_gradient([&](const Vector& x) { return cert.W(StateVector(x, y.z)); }, y.x);
}

Vector gradient_W_z(const CertificateData& cert, const StateVector& y) {
  if (cert.W_grad_z) return cert.W_grad_z(y);
  return finite_difference_gradient([&](const Vector& z) { return cert.W(StateVector(y.x, z)); }, y.z);
}

void InequalityResult::record(double residual, const StateVector& y) {
  ++evaluated;
  min_residual = std::min(min_residual, residual);
  if (residual > max_residual || evaluated == 1) {
    max_residual = residual;
    worst_point = y;
  }
}

bool VerificationReport::pass() const {
  for (const auto& i : inequalities)
    if (!i.pass) return false;
  return true;
}

InequalityResult& VerificationReport::entry(const std::string& name) {
  for (auto& i : inequalities)
    if (i.name == name) return i;
  InequalityResult fresh;
  fresh.name = name;
  inequalities.push_back(std::move(fresh));
  return inequalities.back();
}

const InequalityResult* VerificationReport::find(const std::string& name) const {
  for (const auto& i : inequalities)
    if (i.name == name) return &i;
  return nullptr;
}

const InequalityResult* VerificationReport::worst() const {
  const InequalityResult* w = nullptr;
  for (const auto& i : inequalities) {
    if (!w || (!i.pass && w->pass) || (i.pass == w->pass && i.max_residual > w->max_residual)) w = &i;
  }
  return w;
}

void VerificationReport::finalize() {
  for (auto& i : inequalities) {
    if (i.evaluated > 0) i.pass = i.pass && i.max_residual <= tolerance;
  }
}

std::string to_string(FlowMode m) {
  switch (m) {
    case FlowMode::strict: return "strict";
    case FlowMode::nonstrict: return "nonstrict";
    case FlowMode::recurrence: return "recurrence";
  }
  return "unknown";
}

std::string to_string(JumpMode m) {
  switch (m) {
    case JumpMode::thm1: return "thm1";
    case JumpMode::thm2_relaxed: return "thm2";
    case JumpMode::thm3: return "thm3";
    case JumpMode::thm4: return "thm4";
  }
  return "unknown";
}

FlowMode parse_flow_mode(const std::string& s) {
  if (s == "strict" || s == "thm1") return FlowMode::strict;
  if (s == "nonstrict" || s == "thm2") return FlowMode::nonstrict;
  if (s == "recurrence" || s == "thm3" || s == "thm4") return FlowMode::recurrence;
  throw std::invalid_argument("unknown flow mode: " + s);
}

JumpMode parse_jump_mode(const std::string& s) {
  if (s == "thm1") return JumpMode::thm1;
  if (s == "thm2" || s == "thm2_relaxed") return JumpMode::thm2_relaxed;
  if (s == "thm3") return JumpMode::thm3;
  if (s == "thm4") return JumpMode::thm4;
  throw std::invalid_argument("unknown jump mode: " + s);
}

VerificationReport verify_flow_decrease(const SPSystem& system, const CertificateData& cert,
                                        const ConstantsLedger& ledger, double theta,
                                        const std::vector<StateVector>& grid, FlowMode mode,
                                        const FlowVerifyOptions& options) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("verify_flow_decrease: bad theta");
  VerificationReport report;
  report.kind = "flow";
  report.mode = to_string(mode);
  report.grid_spec = options.grid_spec;
  report.tolerance = options.tolerance;
  report.grid_points = static_cast<long>(grid.size());
  // entry() hands out references; keep them stable.
  report.inequalities.reserve(16);

  const bool recurrence = mode == FlowMode::recurrence;
  const double nu = recurrence ? cert.nu : 0.0;
  const double k4 = ledger.k4;
  if (!recurrence) {
    auto& gate = report.entry("mode_constants");
    gate.record(std::max(std::abs(cert.nu), std::abs(k4)) > 0.0 ? std::max(cert.nu, k4) : 0.0,
                StateVector());
    gate.pass = cert.nu == 0.0 && k4 == 0.0;
    if (!gate.pass) report.notes.push_back("strict and nonstrict modes require nu = k4 = 0");
  }

  const ReducedSystem reduced = build_reduced(system, options.hull_samples, options.selection_grid);
  const int sel = options.selection_grid;
  auto& fast = report.entry("fast_decrease");
  auto& slow = report.entry("reduced_decrease");
  auto& inter_w = report.entry("interconnection_W");
  auto& inter_v = report.entry("interconnection_V");

  for (const StateVector& y : grid) {
    if (!system.flow_set.contains(y)) {
      ++report.skipped;
      continue;
    }
    const double dz = manifold_distance(system, y);
    const double phz = cert.phi_z ? cert.phi_z(dz) : dz;
    const double phx = cert.phi_x(y.x);
    const Vector gV = gradient_V(cert, y.x);
    const Vector gWx = gradient_W_x(cert, y);
    const Vector gWz = system.n_z > 0 ? gradient_W_z(cert, y) : Vector(0);
    const std::vector<Vector> fx = system.flow_x.enumerate(y, sel);
    const std::vector<Vector> fz =
        system.n_z > 0 ? system.flow_z.enumerate(y, sel) : std::vector<Vector>{Vector(0)};
    const std::vector<Vector> ft = reduced.flow(y.x);
    const double indicator = (cert.in_Ox && cert.in_Ox(y.x)) ? 1.0 : 0.0;

    const std::size_t n_sel = std::max(fx.size(), fz.size());
    for (std::size_t k = 0; k < n_sel; ++k) {
      const Vector& fxk = fx[std::min(k, fx.size() - 1)];
      const Vector& fzk = fz[std::min(k, fz.size() - 1)];
      if (system.n_z > 0) fast.record(gWz.dot(fzk) + ledger.k_z * phz * phz, y);
      inter_w.record(gWx.dot(fxk) - (ledger.k1 * phz * phx + ledger.k2 * phz * phz + k4 * phz), y);
      double best = std::numeric_limits<double>::infinity();
      for (const Vector& f : ft) best = std::min(best, gV.dot(fxk - f));
      inter_v.record(best - (ledger.k3 * phz * phx + k4 * phz), y);
    }
    for (const Vector& f : ft) slow.record(gV.dot(f) + ledger.k_x * phx * phx - nu * indicator, y);
  }
  if (report.skipped > 0) {
    std::ostringstream os;
    os << report.skipped << " grid points outside C skipped";
    report.notes.push_back(os.str());
  }
  report.finalize();
  return report;
}

namespace {

double expected_sup(const SPSystem& system, const StateVector& y, const MeasureRule& rule,
                    int parameter_grid, const std::function<double(const StateVector&)>& f,
                    const std::function<bool(const StateVector&)>& admit = {}) {
  return rule.apply([&](const Vector& v) {
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const StateVector& g : system.jump_map.enumerate(y, v, parameter_grid)) {
      if (admit && !admit(g)) continue;
      best = std::max(best, f(g));
      any = true;
    }
    return any ? best : 0.0;
  });
}

double expected_sup_reduced(const ReducedSystem& reduced, const Vector& x, const MeasureRule& rule,
                            const std::function<double(const Vector&)>& f) {
  return rule.apply([&](const Vector& v) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vector& g : reduced.jump(x, v)) best = std::max(best, f(g));
    return best;
  });
}

double zero_if_missing(const FunctionX& f, const Vector& x) { return f ? f(x) : 0.0; }
double zero_if_missing(const Comparison& f, double r) { return f ? f(r) : 0.0; }

}  // namespace

double jump_expectation_sup(const SPSystem& system, const CertificateData& cert, double theta,
                            const StateVector& y, const MeasureRule& rule, int parameter_grid,
                            bool restrict_outside) {
  auto energy = [&](const StateVector& g) { return composite_value(cert, theta, g); };
  if (restrict_outside) {
    return expected_sup(system, y, rule, parameter_grid, energy,
                        [&](const StateVector& g) { return !cert.in_O_chi(g); });
  }
  return expected_sup(system, y, rule, parameter_grid, energy);
}

VerificationReport verify_jump_decrease(const SPSystem& system, const CertificateData& cert,
                                        const ConstantsLedger& ledger, double theta,
                                        const std::vector<StateVector>& grid, JumpMode mode,
                                        const JumpVerifyOptions& options) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("verify_jump_decrease: bad theta");
  VerificationReport report;
  report.kind = "jump";
  report.mode = to_string(mode);
  report.grid_spec = options.grid_spec;
  report.tolerance = options.tolerance;
  report.grid_points = static_cast<long>(grid.size());
  // entry() hands out references; keep them stable.
  report.inequalities.reserve(16);

  if ((mode == JumpMode::thm1 || mode == JumpMode::thm3) && !options.rho_hat) {
    throw std::invalid_argument("verify_jump_decrease: mode " + to_string(mode) + " requires rho_hat");
  }
  const MeasureRule rule = make_rule(system.measure, options.method);
  const int pg = options.parameter_grid;
  const double nu = options.nu.value_or(cert.nu);

  // Relaxed mode: pick the alternative whose scalar condition holds.
  bool branch_reduced = true;
  if (mode == JumpMode::thm2_relaxed) {
    const double b1 = ledger.k1 > 0.0 ? ledger.k3 * ledger.k5 / ledger.k1 - ledger.c_x
                                      : std::numeric_limits<double>::infinity();
    const double b2 = ledger.k3 > 0.0 ? ledger.k1 * ledger.k6 / ledger.k3 - ledger.c_z
                                      : std::numeric_limits<double>::infinity();
    branch_reduced = b1 < 0.0 || !(b2 < 0.0);
    auto& cond = report.entry("relaxed_condition");
    cond.record(std::min(b1, b2), StateVector());
    cond.pass = b1 < 0.0 || b2 < 0.0;
    report.branch = branch_reduced ? "k3*k5/k1 < c_x" : "k1*k6/k3 < c_z";
  }
  ReducedSystem reduced;
  if (mode == JumpMode::thm2_relaxed) reduced = build_reduced(system, 1);

  for (const StateVector& y : grid) {
    if (!system.jump_set.contains(y)) {
      ++report.skipped;
      continue;
    }
    const double e = composite_value(cert, theta, y);
    switch (mode) {
      case JumpMode::thm1: {
        const double lhs = jump_expectation_sup(system, cert, theta, y, rule, pg);
        report.entry("expected_decrease").record(lhs - (e - options.rho_hat(y)), y);
        break;
      }
      case JumpMode::thm3: {
        const double lhs = jump_expectation_sup(system, cert, theta, y, rule, pg);
        const double ind = cert.in_O_chi(y) ? 1.0 : 0.0;
        report.entry("expected_decrease").record(lhs - (e - options.rho_hat(y) + nu * ind), y);
        break;
      }
      case JumpMode::thm4: {
        auto& ent = report.entry("restricted_nonincrease");
        if (cert.in_O_chi(y)) break;
        const double lhs = jump_expectation_sup(system, cert, theta, y, rule, pg, true);
        ent.record(lhs - e, y);
        break;
      }
      case JumpMode::thm2_relaxed: {
        const double lhs = jump_expectation_sup(system, cert, theta, y, rule, pg);
        report.entry("composite_nonincrease").record(lhs - e, y);
        const double dz = manifold_distance(system, y);
        const double ew = expected_sup(system, y, rule, pg, [&](const StateVector& g) { return cert.W(g); });
        const double ev = expected_sup_reduced(reduced, y.x, rule, cert.V);
        const double w = cert.W(y);
        const double vx = cert.V(y.x);
        if (branch_reduced) {
          report.entry("reduced_jump").record(ev - vx + ledger.c_x * zero_if_missing(cert.rho_x, y.x), y);
          report.entry("fast_jump_growth").record(ew - w - ledger.k5 * zero_if_missing(cert.rho5, y.x), y);
        } else {
          report.entry("fast_jump").record(ew - w + ledger.c_z * zero_if_missing(cert.rho_z, dz), y);
          report.entry("reduced_jump_growth").record(ev - vx - ledger.k6 * zero_if_missing(cert.rho6, dz), y);
        }
        break;
      }
    }
  }
  if (report.skipped > 0) {
    std::ostringstream os;
    os << report.skipped << " grid points outside D skipped";
    report.notes.push_back(os.str());
  }
  report.finalize();
  return report;
}

VerificationReport verify_sandwich(const CertificateData& cert, const std::vector<StateVector>& grid,
                                   double tolerance) {
  VerificationReport report;
  report.kind = "sandwich";
  report.tolerance = tolerance;
  report.grid_points = static_cast<long>(grid.size());
  // entry() hands out references; keep them stable.
  report.inequalities.reserve(16);
  for (const StateVector& y : grid) {
    const double w = cert.W(y);
    const double v = cert.V(y.x);
    const double dz = cert.manifold_distance ? cert.manifold_distance(y) : 0.0;
    const double da = cert.dist_A ? cert.dist_A(y.x) : 0.0;
    const double gauge = cert.varpi ? cert.varpi(y.x) : da;
    report.entry("W_nonnegative").record(-w, y);
    report.entry("V_nonnegative").record(-v, y);
    if (cert.alpha1) report.entry("W_lower").record(cert.alpha1(dz) - w, y);
    if (cert.alpha2) report.entry("W_upper").record(w - cert.alpha2(dz), y);
    if (cert.alpha3) report.entry("V_lower").record(cert.alpha3(da) - v, y);
    if (cert.alpha4) report.entry("V_upper").record(v - cert.alpha4(gauge), y);
  }
  report.finalize();
  return report;
}

namespace {

double relative_gap(const Vector& analytic, const Vector& numeric, const std::vector<Index>& skip) {
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    if (std::find(skip.begin(), skip.end(), i) != skip.end()) continue;
    const double scale = std::max(1.0, std::abs(numeric[i]));
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

}  // namespace

double gradient_consistency(const CertificateData& cert, const std::vector<StateVector>& points) {
  double worst = 0.0;
  for (const StateVector& y : points) {
    if (cert.V_grad) {
      worst = std::max(worst, relative_gap(cert.V_grad(y.x), finite_difference_gradient(cert.V, y.x),
                                           cert.discrete_x));
    }
    if (cert.W_grad_x) {
      const Vector fd = finite_difference_gradient(
          [&](const Vector& x) { return cert.W(StateVector(x, y.z)); }, y.x);
      worst = std::max(worst, relative_gap(cert.W_grad_x(y), fd, cert.discrete_x));
    }
    if (cert.W_grad_z && y.z.size() > 0) {
      const Vector fd = finite_difference_gradient(
          [&](const Vector& z) { return cert.W(StateVector(y.x, z)); }, y.z);
      worst = std::max(worst, relative_gap(cert.W_grad_z(y), fd, cert.discrete_z));
    }
  }
  return worst;
}

MonitorTrace monitor_along_arc(const CertificateData& cert, double theta, const HybridArc& arc,
                               double step_h) {
  MonitorTrace trace;
  trace.tolerance = 1e-6 * step_h;
  for (std::size_t s = 0; s < arc.segments.size(); ++s) {
    const FlowSegment& seg = arc.segments[s];
    double prev = 0.0;
    for (std::size_t i = 0; i < seg.samples.size(); ++i) {
      const double e = composite_value(cert, theta, seg.samples[i].y);
      trace.t.push_back(seg.samples[i].t);
      trace.j.push_back(seg.start.j);
      trace.value.push_back(e);
      if (i > 0) {
        const double inc = e - prev;
        trace.flow_increments.push_back(inc);
        if (inc > trace.tolerance && !cert.in_O_chi(seg.samples[i - 1].y)) {
          trace.flagged.push_back(trace.flow_increments.size() - 1);
        }
      }
      prev = e;
    }
    if (s < arc.jumps.size()) {
      const JumpRecord& jr = arc.jumps[s];
      const double before = composite_value(cert, theta, jr.pre);
      const double after = composite_value(cert, theta, jr.post);
      trace.jump_increments.push_back(after - before);
      if (s + 1 >= arc.segments.size()) {
        trace.t.push_back(jr.time.t);
        trace.j.push_back(jr.time.j + 1);
        trace.value.push_back(after);
      }
    }
  }
  return trace;
}

}  // namespace shds
