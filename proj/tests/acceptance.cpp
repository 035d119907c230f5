// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria (capped at 1 for ctest).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "shds/analysis.hpp"
#include "shds/io.hpp"
#include "shds/jacobi.hpp"
#include "shds/lmi.hpp"
#include "shds/measure.hpp"
#include "shds/quadrature.hpp"
#include "shds/scenarios.hpp"

using namespace shds;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " [over time budget]";
  }
  if (!o.pass) ++failures;
  std::printf("ACCEPTANCE %2d %s  %s (%.2f s of %.0f s) %s\n", id, o.pass ? "PASS" : "FAIL", title, secs, budget_s,
              o.detail.c_str());
  std::fflush(stdout);
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

StateVector scalar_state(double x, double z) {
  return StateVector(Vector::Constant(1, x), Vector::Constant(1, z));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// 1. Closed-loop matrices and the Lyapunov identities.
Outcome criterion1() {
  const Matrix At1 = mat2(-2, 2, -1, 0), B1 = mat2(0, 1, 1, 0);
  const Matrix At2 = mat2(-2, -1, -2, -2), B2 = mat2(0, 1, -1, 0);
  const Matrix L = -Matrix::Identity(2, 2), H = mat2(1, -1, 1, 1);
  const Matrix P1 = mat2(0.5, 0.75, 0.75, 2.75), P2 = mat2(2.75, -0.75, -0.75, 0.5);
  const Matrix A1 = At1 - B1 * L.inverse() * H;
  const Matrix A2 = At2 - B2 * L.inverse() * H;
  const Matrix I = Matrix::Identity(2, 2);
  double err = (A1 - mat2(-1, 3, 0, -1)).cwiseAbs().maxCoeff();
  err = std::max(err, (A1.transpose() * P1 + P1 * A1 + I).cwiseAbs().maxCoeff());
  err = std::max(err, (A2.transpose() * P2 + P2 * A2 + I).cwiseAbs().maxCoeff());
  // The scenario must carry the same matrices.
  const Scenario s = make_scenario("switching", std::nullopt, false);
  err = std::max(err, (s.lmi->A[0] - A1).cwiseAbs().maxCoeff());
  err = std::max(err, (s.lmi->A[1] - A2).cwiseAbs().maxCoeff());
  return {err <= 1e-12, "max entry error " + fmt(err)};
}

// 2. LMIs hold at eta = 0.03 with the searched sigma and fail (i) at eta = 1.
Outcome criterion2() {
  const Scenario s = make_scenario("switching", std::nullopt, false);
  SwitchedLMIInstance inst = *s.lmi;
  const LMIReport ok = check_switched_lmis(inst);
  inst.eta = 1.0;
  const LMIReport bad = check_switched_lmis(inst);
  const bool pass = ok.pass() && inst.sigma > 0.0 && !bad.pass("(i)");
  return {pass, "sigma = " + fmt(inst.sigma) + ", eta=0.03 " + (ok.pass() ? "feasible" : "INFEASIBLE") +
                    ", eta=1 (i) " + (bad.pass("(i)") ? "holds" : "fails")};
}

// 3. Fast-decrease residual and the jump-decrease lower bounds on a fine grid.
Outcome criterion3() {
  const Scenario s = make_scenario("example1", std::nullopt, false);
  std::vector<StateVector> grid;
  for (int i = 0; i <= 200; ++i)
    for (int k = 0; k <= 200; ++k) grid.push_back(scalar_state(-5.0 + 0.05 * i, -5.0 + 0.05 * k));
  const VerificationReport r =
      verify_flow_decrease(s.system, s.cert, s.ledger, s.theta(), grid, s.flow_mode);
  const InequalityResult* fast = r.find("fast_decrease");
  const bool exact = fast && fast->evaluated == 201L * 201L && fast->max_residual == 0.0 && fast->min_residual == 0.0;

  const MeasureRule rule = make_rule(s.system.measure, ExpectationMethod::exact_discrete());
  double min_out = 1e300, min_all = 1e300, gap = 0.0;
  for (const StateVector& y : grid) {
    const double closed = example1_rho_tilde(y.x[0], y.z[0]);
    // Independent route: E(y) - E[sup E(g)] by enumeration.
    const double direct = composite_value(s.cert, 0.5, y) - jump_expectation_sup(s.system, s.cert, 0.5, y, rule, 101);
    gap = std::max(gap, std::abs(closed - direct));
    min_all = std::min(min_all, closed);
    if (!s.cert.in_O_chi(y)) min_out = std::min(min_out, closed);
  }
  const bool pass = exact && min_out >= 0.1 - 1e-9 && min_all >= -3.0 / 68.0 - 1e-9 && gap < 1e-12;
  return {pass, std::string("fast residual ") + (exact ? "exactly 0" : "NONZERO") + ", min outside O_chi " +
                    fmt(min_out) + ", global min " + fmt(min_all) + ", closed-form gap " + fmt(gap)};
}

// 4. Discrete jump expectation at the origin and the recurrence jump inequality.
Outcome criterion4() {
  const Scenario s = make_scenario("example1", std::nullopt, false);
  const double theta = s.theta();
  const MeasureRule rule = make_rule(s.system.measure, ExpectationMethod::exact_discrete());
  const double e = jump_expectation_sup(s.system, s.cert, theta, scalar_state(0, 0), rule, 101);
  // Enumeration by hand: v = +1 (3/20) lands at x = 1, z = -1 with E = 1/4; v = -1 stays at 0.
  const double oracle = 3.0 / 20.0 * (0.5 * 0.5 * 1.0) + 17.0 / 20.0 * 0.0;
  JumpVerifyOptions opt = s.jump_options;
  opt.nu = 0.1;
  opt.rho_hat = [](const StateVector&) { return 1.0 / 20.0; };
  const VerificationReport r = verify_jump_decrease(s.system, s.cert, s.ledger, theta, s.jump_grid, s.jump_mode, opt);
  const bool pass = std::abs(e - 3.0 / 80.0) <= 1e-14 && std::abs(oracle - 3.0 / 80.0) <= 1e-15 && r.pass() &&
                    r.grid_points == 41 * 41 && r.skipped == 0;
  return {pass, "E[sup E] = " + fmt(e) + " (3/80 = 0.0375), jump inequality " + (r.pass() ? "holds" : "FAILS") +
                    " on " + std::to_string(r.grid_points) + " points, worst residual " +
                    fmt(r.worst() ? r.worst()->max_residual : 0.0)};
}

// 5. No flagged flow increases of E_theta* outside O_chi.
Outcome criterion5() {
  Outcome o;
  for (const char* name : {"switching", "heavy_ball", "switching_plant"}) {
    Scenario s = make_scenario(name, 0.1, true);
    s.config.horizon_t = 50.0;
    const InitialSampler sampler = s.init_set(s.default_radius);
    std::vector<std::size_t> flags(20, 0);
    parallel_for(20, [&](long i) {
      RandomStream stream(2024, static_cast<std::uint64_t>(i));
      RandomStream init = stream.channel(kInitialChannel);
      long rejected = 0;
      const StateVector y0 = draw_initial(s.system, sampler, init, rejected);
      const HybridArc arc = simulate_arc(s.system, y0, stream, s.config);
      flags[i] = monitor_along_arc(s.cert, s.theta(), arc, s.config.step_h).flag_count();
    });
    std::size_t total = 0, seeds = 0;
    for (std::size_t f : flags) {
      total += f;
      seeds += f > 0;
    }
    o.pass = o.pass && total == 0;
    o.detail += std::string(name) + ": " + std::to_string(total) + " flags in " + std::to_string(seeds) + "/20 seeds; ";
  }
  return o;
}

// 6. Heavy-ball inputs converge to the minimizer.
Outcome criterion6() {
  Scenario s = make_scenario("heavy_ball", 0.1, true);
  s.config.horizon_t = 50.0;
  const Vector u_star = (Vector(2) << -0.5, 0.5).finished();
  const InitialSampler sampler = s.init_set(3.0);
  const long n = 200;
  std::vector<int> ok(n, 0);
  std::vector<double> err(n, 0.0);
  parallel_for(n, [&](long i) {
    RandomStream stream(6, static_cast<std::uint64_t>(i));
    RandomStream init = stream.channel(kInitialChannel);
    long rejected = 0;
    const StateVector y0 = draw_initial(s.system, sampler, init, rejected);
    ArcObserver obs;
    obs.record_samples = false;
    const HybridArc arc = simulate_arc(s.system, y0, stream, s.config, &obs);
    err[i] = (arc.end_state().x.head(2) - u_star).norm();
    ok[i] = arc.end_time().t >= 50.0 - 1e-9 && err[i] < 0.05;
  });
  long k = 0;
  for (int v : ok) k += v;
  const Proportion p = wilson(k, n);
  const double worst = *std::max_element(err.begin(), err.end());
  return {p.lower >= 0.95, std::to_string(k) + "/200 within 0.05, Wilson lower " + fmt(p.lower) +
                               ", worst |u - u*| " + fmt(worst)};
}

// 7. Recurrence fractions.
Outcome criterion7() {
  const Scenario e1 = make_scenario("example1", 0.05, true);
  const TrialReport r1 = estimate_recurrence(e1.system, e1.cert, e1.init_set(5.0), 1000, 200.0, 7, e1.config);
  const Scenario b = make_scenario("bounded_inputs", 0.1, true);
  const TrialReport r2 = estimate_recurrence(b.system, b.cert, b.init_set(10.0), 500, 100.0, 7, b.config);
  const bool pass = r1.success.lower >= 0.99 && r2.success.successes == r2.trials;
  return {pass, "example1 " + std::to_string(r1.success.successes) + "/1000 (Wilson lower " +
                    fmt(r1.success.lower) + "), bounded_inputs " + std::to_string(r2.success.successes) + "/500"};
}

// 8. Boundary layer shrinks and the slow trace approaches the reduced solution.
Outcome criterion8() {
  Outcome o;
  for (double x0 : {0.8, 0.4}) {
    double prev_layer = 1e300, prev_err = 1e300;
    std::ostringstream os;
    for (double eps : {0.1, 0.01, 0.001}) {
      Scenario s = make_scenario("example1", eps, false);
      s.config.horizon_t = 5.0;
      s.config.step_h = std::min(1e-3, eps / 50.0);
      const HybridArc arc = simulate_arc(s.system, scalar_state(x0, -x0), RandomStream(8, 0), s.config);
      double layer = 0.0, err = 0.0;
      for (const auto& seg : arc.segments) {
        for (const auto& smp : seg.samples) {
          // Reduced solution x' = -x.
          err = std::max(err, std::abs(smp.y.x[0] - x0 * std::exp(-smp.t)));
          if (smp.t >= 1.0) layer = std::max(layer, std::abs(smp.y.z[0] + smp.y.x[0]));
        }
      }
      o.pass = o.pass && arc.jumps.empty() && layer < prev_layer && err < prev_err;
      prev_layer = layer;
      prev_err = err;
      os << "eps " << eps << ": |z+x| " << fmt(layer) << ", |x - x~| " << fmt(err) << "; ";
    }
    o.detail += "x0 = " + fmt(x0) + " [" + os.str() + "] ";
  }
  return o;
}

// Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form.
std::vector<double> sym3_roots(const Matrix& A) {
  const double p1 = A(0, 1) * A(0, 1) + A(0, 2) * A(0, 2) + A(1, 2) * A(1, 2);
  const double q = A.trace() / 3.0;
  const double p2 = std::pow(A(0, 0) - q, 2) + std::pow(A(1, 1) - q, 2) + std::pow(A(2, 2) - q, 2) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  if (p == 0.0) return {q, q, q};
  const Matrix Bm = (A - q * Matrix::Identity(3, 3)) / p;
  const double r = std::clamp(Bm.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  std::vector<double> out = {e1, 3.0 * q - e1 - e3, e3};
  std::sort(out.begin(), out.end());
  return out;
}

// 9. Numerical oracles.
Outcome criterion9() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  double eig_err = 0.0;
  for (int n = 0; n < 1000; ++n) {
    if (n % 2 == 0) {
      const double a = U(rng), b = U(rng), d = U(rng);
      const Matrix M = mat2(a, b, b, d);
      const double m = 0.5 * (a + d), r = std::hypot(0.5 * (a - d), b);
      const Vector ev = jacobi_eigenvalues(M);
      eig_err = std::max({eig_err, std::abs(ev[0] - (m - r)), std::abs(ev[1] - (m + r))});
    } else {
      Matrix M(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int k = i; k < 3; ++k) M(i, k) = M(k, i) = U(rng);
      const Vector ev = jacobi_eigenvalues(M);
      const std::vector<double> ref = sym3_roots(M);
      for (int i = 0; i < 3; ++i) eig_err = std::max(eig_err, std::abs(ev[i] - ref[i]));
    }
  }
  double quad_err = 0.0;
  for (double T : {0.5, 2.0, 10.0, 100.0}) {
    const JumpMeasure m = JumpMeasure::truncated_exponential(T);
    const double e = expectation(m, [](const Vector& v) { return v[0]; }, ExpectationMethod::quadrature(64));
    quad_err = std::max(quad_err, std::abs(e - truncated_exponential_mean(T)));
  }
  double grad_err = 0.0;
  for (const auto& info : list_scenarios()) {
    const Scenario s = make_scenario(info.name, std::nullopt, false);
    const InitialSampler sampler = s.init_set(s.default_radius);
    RandomStream stream(99, 0, kInitialChannel);
    std::vector<StateVector> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(sampler(stream));
    grad_err = std::max(grad_err, gradient_consistency(s.cert, pts));
  }
  const bool pass = eig_err <= 1e-10 && quad_err <= 1e-10 && grad_err <= 1e-5;
  return {pass, "eigen " + fmt(eig_err) + ", quadrature " + fmt(quad_err) + ", gradients " + fmt(grad_err)};
}

// 10. Determinism across runs and thread counts.
Outcome criterion10() {
  const Scenario s = make_scenario("switching_plant", 0.1, false);
  auto arc_csv = [&]() {
    RandomStream stream(10, 3);
    RandomStream init = stream.channel(kInitialChannel);
    long rejected = 0;
    const StateVector y0 = draw_initial(s.system, s.init_set(1.0), init, rejected);
    std::ostringstream os;
    write_arc_csv(os, simulate_arc(s.system, y0, stream, s.config));
    write_jump_csv(os, simulate_arc(s.system, y0, stream, s.config));
    return os.str();
  };
  const bool arcs = arc_csv() == arc_csv();

  const Scenario e1 = make_scenario("example1", std::nullopt, false);
  auto report = [&](int threads) {
    const TrialReport r = estimate_recurrence(e1.system, e1.cert, e1.init_set(5.0), 200, 50.0, 11, e1.config, threads);
    SimConfig short_cfg = s.config;
    short_cfg.horizon_t = 5.0;
    const TrialReport c =
        estimate_containment(s.system, s.cert, s.init_set(1.0), 0.5, 2.0, 16, 11, short_cfg, threads);
    std::ostringstream os;
    os << to_json(r).dump() << to_json(c).dump();
    write_trials_csv(os, r);
    write_trials_csv(os, c);
    return os.str();
  };
  const std::string a = report(1), b = report(1), c = report(4), d = report(3);
  const bool reports = a == b && a == c && a == d;
  return {arcs && reports, std::string("arc CSV ") + (arcs ? "identical" : "DIFFERS") + ", reports " +
                               (reports ? "identical for 1/3/4 threads" : "DIFFER")};
}

}  // namespace

int main() {
  run(1, "closed-loop matrices and Lyapunov identities", 1, criterion1);
  run(2, "switched LMI feasibility (eta = 0.03 feasible, eta = 1 fails (i))", 1, criterion2);
  run(3, "example1 certificate identities on [-5,5]^2", 10, criterion3);
  run(4, "example1 jump expectation oracle and recurrence jump inequality", 10, criterion4);
  run(5, "flow monotonicity monitor (20 seeds, t = 50)", 120, criterion5);
  run(6, "heavy-ball convergence to u* (200 trials)", 300, criterion6);
  run(7, "recurrence fractions", 600, criterion7);
  run(8, "two-time-scale consistency", 60, criterion8);
  run(9, "numerical oracles", 30, criterion9);
  run(10, "determinism across runs and thread counts", 60, criterion10);
  std::printf("ACCEPTANCE SUMMARY %d/10 passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
