#include "shds/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "shds/io.hpp"
#include "shds/jacobi.hpp"

namespace shds {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Small helpers

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return out;
}

// Uniform point in the d-ball of radius R (one logical draw).
Vector ball_point(Draw& d, int dim, double R) {
  Vector g(dim);
  for (int i = 0; i < dim; ++i) g[i] = d.normal();
  const double n = g.norm();
  if (n == 0.0) return Vector::Zero(dim);
  return g / n * (R * std::pow(d.uniform(), 1.0 / dim));
}

int mode_index(double q) { return q < 1.5 ? 0 : 1; }

double timer_factor(double sigma, double tau, double T) { return 1.0 / (sigma * tau / T + 1.0); }

double param(const json& p, const char* key) { return p.at(key).get<double>(); }

struct Kind {
  const char* name;
  const char* description;
  double epsilon;
  json parameters;
  SimConfig simulation;
};

SimConfig sim(double h, double horizon_t, int horizon_j = 1000) {
  SimConfig c;
  c.step_h = h;
  c.horizon_t = horizon_t;
  c.horizon_j = horizon_j;
  return c;
}

const std::vector<Kind>& kinds() {
  static const std::vector<Kind> table = {
      {"example1", "scalar two-time-scale system with random integer resets (recurrence)", 0.1,
       json{{"p_up", 0.15}, {"nu", 0.1}, {"rho_hat", 0.05}, {"chi", 1.0}}, sim(1e-3, 10.0)},
      {"switching", "switched linear system with spontaneous mode transitions", 0.1,
       json{{"eta", 0.03}, {"T", 2.0}, {"lambda1", 0.5}, {"safety", 0.9}}, sim(1e-3, 50.0)},
      {"heavy_ball", "heavy-ball feedback optimization with random momentum resets", 0.1,
       json{{"beta", 1.0}, {"rho", 0.5}, {"T", 100.0}}, sim(1e-3, 50.0)},
      {"switching_plant", "gradient feedback optimization of a fast switching plant", 0.1,
       json{{"eta", 0.03}, {"T", 2.0}, {"lambda1", 0.5}, {"a_u", 0.25}, {"a_y", 0.25}, {"safety", 0.9}},
       sim(1e-3, 50.0)},
      {"bounded_inputs", "linear system with bounded stochastic inputs (recurrence)", 0.1,
       json{{"chi1", 0.5}, {"c_tilde", 1.0}, {"T", 1.0}, {"input_radius", 1.0}}, sim(1e-3, 20.0)},
      {"zero", "zero dynamics with no jumps (estimator sanity)", 1.0, json::object(), sim(1e-2, 1.0)},
  };
  return table;
}

const Kind& find_kind(const std::string& name) {
  for (const auto& k : kinds())
    if (name == k.name) return k;
  throw std::invalid_argument("unknown scenario: " + name);
}

// ---------------------------------------------------------------------------
// Example 1: scalar recurrence

Scenario build_example1(double eps, const json& p) {
  const double p_up = param(p, "p_up");
  if (!(p_up > 0.0 && p_up < 1.0)) throw std::invalid_argument("example1: p_up must lie in (0, 1)");
  Scenario s;
  SPSystem& sys = s.system;
  sys.name = "example1";
  sys.n_x = 1;
  sys.n_z = 1;
  sys.epsilon = eps;
  sys.flow_set = SetPredicate::everything();
  sys.jump_set = SetPredicate(
      [](const StateVector& y) {
        const double x = y.x[0];
        return x < 0.0 ? -x : std::abs(x - std::round(x));
      },
      [](const StateVector& y) {
        const double x = y.x[0];
        return x < 0.0 ? M_PI * x : std::sin(M_PI * x);
      });
  sys.flow_x.eval = [](const StateVector& y, double) { return Vector(y.z); };
  sys.flow_z.eval = [](const StateVector& y, double) { return Vector(-(y.z + y.x)); };
  sys.jump_map.eval = [](const StateVector& y, const Vector& v, double) {
    const double xp = std::max(0.0, y.x[0] + v[0]);
    return StateVector(Vector::Constant(1, xp), Vector::Constant(1, -xp));
  };
  sys.measure = JumpMeasure::discrete_scalar({-1.0, 1.0}, {1.0 - p_up, p_up});
  sys.manifold = Manifold::affine(Matrix::Constant(1, 1, -1.0), Vector::Zero(1));

  CertificateData& c = s.cert;
  c.V = [](const Vector& x) { return 0.5 * x[0] * x[0]; };
  c.V_grad = [](const Vector& x) { return Vector(x); };
  c.W = [](const StateVector& y) {
    const double e = y.z[0] + y.x[0];
    return 0.5 * e * e;
  };
  c.W_grad_x = [](const StateVector& y) { return Vector(y.z + y.x); };
  c.W_grad_z = [](const StateVector& y) { return Vector(y.z + y.x); };
  c.manifold_distance = [](const StateVector& y) { return std::abs(y.z[0] + y.x[0]); };
  c.phi_x = [](const Vector& x) { return std::abs(x[0]); };
  c.phi_z = [](double r) { return r; };
  c.alpha1 = c.alpha2 = [](double r) { return 0.5 * r * r; };
  c.alpha3 = c.alpha4 = [](double r) { return 0.5 * r * r; };
  c.dist_A = [](const Vector& x) { return std::max(std::abs(x[0]) - 1.0, 0.0); };
  c.varpi = [](const Vector& x) { return std::abs(x[0]); };
  c.in_Ox = [](const Vector& x) { return std::abs(x[0]) < 1.0; };
  c.chi = param(p, "chi");
  c.nu = param(p, "nu");

  ConstantsLedger& l = s.ledger;
  l.k_x = l.k_z = 1.0;
  l.k1 = l.k2 = l.k3 = 1.0;
  l.k4 = 0.0;

  const double rho_hat = param(p, "rho_hat");
  s.jump_options.rho_hat = [rho_hat](const StateVector&) { return rho_hat; };
  s.jump_options.nu = c.nu;
  s.flow_mode = FlowMode::recurrence;
  s.jump_mode = JumpMode::thm3;
  s.default_radius = 5.0;
  s.init_set = [](double R) -> InitialSampler {
    return [R](RandomStream& st) {
      Draw d = st.next();
      const Vector v = ball_point(d, 2, R);
      return StateVector(Vector::Constant(1, v[0]), Vector::Constant(1, v[1]));
    };
  };
  for (double x : linspace(-5, 5, 41))
    for (double z : linspace(-5, 5, 41))
      s.flow_grid.emplace_back(Vector::Constant(1, x), Vector::Constant(1, z));
  for (int x = 0; x <= 40; ++x)
    for (double z : linspace(-10, 10, 41))
      s.jump_grid.emplace_back(Vector::Constant(1, x), Vector::Constant(1, z));
  s.jump_options.grid_spec = "x in {0..40}, z in [-10,10] (41 points)";
  s.notes = {
      {"flow_x", "slow flow x' = z"},
      {"flow_z", "fast flow eps z' = -(z + x); manifold z = -x"},
      {"jump_set", "x a nonnegative integer; membership is the distance to the nearest one"},
      {"jump_map", "x+ = max(0, x + v), z+ = -x+"},
      {"p_up", "probability of v = +1 (3/20); v = -1 otherwise"},
      {"k_x", "reduced flow -x gives <grad V, f> = -x^2"},
      {"k_z", "<grad_z W, F_z> = -(z + x)^2"},
      {"k1", "cross term of grad_x W along F_x, |z+x||x| coefficient"},
      {"k2", "cross term of grad_x W along F_x, |z+x|^2 coefficient"},
      {"k3", "V along the fast deviation: x (z + x)"},
      {"k4", "no additive term in the flow bounds"},
      {"nu", "recurrence slack inside O_x = (-1, 1)"},
      {"rho_hat", "uniform expected decrease at jumps"},
      {"chi", "radius of the fast neighbourhood in O_chi"},
  };
  return s;
}

// ---------------------------------------------------------------------------
// Switched linear system with random dwell times

struct SwitchingData {
  std::vector<Matrix> At, B, A, P;
  Matrix L, H, Pz;
  double T = 2.0, eta = 0.03;
  std::vector<double> lambda;
  FeasibilityResult feas;
};

SwitchingData switching_data(const json& p) {
  SwitchingData d;
  d.At = {mat2(-2, 2, -1, 0), mat2(-2, -1, -2, -2)};
  d.B = {mat2(0, 1, 1, 0), mat2(0, 1, -1, 0)};
  d.L = -Matrix::Identity(2, 2);
  d.H = mat2(1, -1, 1, 1);
  d.P = {mat2(0.5, 0.75, 0.75, 2.75), mat2(2.75, -0.75, -0.75, 0.5)};
  d.Pz = 0.5 * Matrix::Identity(2, 2);
  d.T = param(p, "T");
  d.eta = param(p, "eta");
  const double l1 = param(p, "lambda1");
  if (!(l1 > 0.0 && l1 < 1.0)) throw std::invalid_argument("switching: lambda1 must lie in (0, 1)");
  d.lambda = {l1, 1.0 - l1};
  const Matrix Linv = d.L.inverse();
  for (int q = 0; q < 2; ++q) d.A.push_back(d.At[q] - d.B[q] * Linv * d.H);
  d.feas = feasibility_search(d.A, d.P, d.lambda, d.T, param(p, "safety"));
  return d;
}

Scenario build_switching(double eps, const json& p) {
  const SwitchingData d = switching_data(p);
  const double sigma = d.feas.sigma;
  const double T = d.T;
  const double eta = d.eta;
  const Matrix Linv = d.L.inverse();
  const Matrix M = -Linv * d.H;  // manifold z = M xi

  Scenario s;
  SPSystem& sys = s.system;
  sys.name = "switching";
  sys.n_x = 4;  // (xi1, xi2, q, tau)
  sys.n_z = 2;
  sys.epsilon = eps;
  sys.flow_set = SetPredicate([T](const StateVector& y) {
    return std::max(lattice_membership(y.x[2], {1.0, 2.0}), interval_membership(y.x[3], 0.0, T));
  });
  sys.jump_set = SetPredicate(
      [](const StateVector& y) {
        return std::max(lattice_membership(y.x[2], {1.0, 2.0}), std::abs(y.x[3]));
      },
      [](const StateVector& y) { return y.x[3]; });
  sys.flow_x.set_valued = true;
  sys.flow_x.eval = [At = d.At, B = d.B, eta](const StateVector& y, double lambda) {
    const int q = mode_index(y.x[2]);
    Vector f = Vector::Zero(4);
    f.head(2) = At[q] * y.x.head(2) + B[q] * y.z;
    f[3] = -lambda * eta;
    return f;
  };
  sys.flow_z.eval = [H = d.H, L = d.L](const StateVector& y, double) {
    return Vector(H * y.x.head(2) + L * y.z);
  };
  sys.jump_map.eval = [](const StateVector& y, const Vector& v, double) {
    StateVector g = y;
    g.x[2] = v[0];
    g.x[3] = v[1];
    return g;
  };
  sys.measure = JumpMeasure::product({JumpMeasure::discrete_scalar({1.0, 2.0}, d.lambda),
                                      JumpMeasure::uniform_interval(0.0, T)});
  Matrix gain = Matrix::Zero(2, 4);
  gain.leftCols(2) = M;
  sys.manifold = Manifold::affine(gain, Vector::Zero(2));

  CertificateData& c = s.cert;
  c.V = [P = d.P, sigma, T](const Vector& x) {
    const Vector xi = x.head(2);
    return timer_factor(sigma, x[3], T) * xi.dot(P[mode_index(x[2])] * xi);
  };
  c.V_grad = [P = d.P, sigma, T](const Vector& x) {
    const Vector xi = x.head(2);
    const Matrix& Pq = P[mode_index(x[2])];
    const double cf = timer_factor(sigma, x[3], T);
    Vector g = Vector::Zero(4);
    g.head(2) = 2.0 * cf * Pq * xi;
    g[3] = -cf * cf * sigma / T * xi.dot(Pq * xi);
    return g;
  };
  auto dev = [M](const StateVector& y) { return Vector(y.z - M * y.x.head(2)); };
  c.W = [dev, Pz = d.Pz](const StateVector& y) {
    const Vector e = dev(y);
    return e.dot(Pz * e);
  };
  c.W_grad_x = [dev, Pz = d.Pz, M](const StateVector& y) {
    Vector g = Vector::Zero(4);
    g.head(2) = -2.0 * M.transpose() * Pz * dev(y);
    return g;
  };
  c.W_grad_z = [dev, Pz = d.Pz](const StateVector& y) { return Vector(2.0 * Pz * dev(y)); };
  c.manifold_distance = [dev](const StateVector& y) { return dev(y).norm(); };
  c.phi_x = [](const Vector& x) { return x.head(2).norm(); };
  c.phi_z = [](double r) { return r; };
  const double pz_min = lambda_min_sym(d.Pz), pz_max = lambda_max_sym(d.Pz);
  double p_min = 1e300, p_max = 0.0;
  for (const Matrix& P : d.P) {
    p_min = std::min(p_min, lambda_min_sym(P));
    p_max = std::max(p_max, lambda_max_sym(P));
  }
  c.alpha1 = [pz_min](double r) { return pz_min * r * r; };
  c.alpha2 = [pz_max](double r) { return pz_max * r * r; };
  c.alpha3 = [p_min, sigma](double r) { return p_min / (sigma + 1.0) * r * r; };
  c.alpha4 = [p_max](double r) { return p_max * r * r; };
  c.dist_A = [](const Vector& x) { return x.head(2).norm(); };
  c.rho_x = c.rho5 = [](const Vector& x) { return x.head(2).squaredNorm(); };
  c.discrete_x = {2};

  ConstantsLedger& l = s.ledger;
  const Matrix G = d.H.transpose() * Linv.transpose() * d.Pz;
  double k1 = 0, k2 = 0, k3 = 0, lam_i = -1e300, lam_ii = -1e300;
  const Matrix Pbar = d.lambda[0] * d.P[0] + d.lambda[1] * d.P[1];
  for (int q = 0; q < 2; ++q) {
    k1 = std::max(k1, 2.0 * sigma_max(d.A[q]) * sigma_max(G));
    k2 = std::max(k2, 2.0 * lambda_max_sym(Matrix(d.B[q].transpose() * G)));
    k3 = std::max(k3, 2.0 * sigma_max(d.P[q]) * sigma_max(d.B[q]));
    const Matrix Qi = d.A[q].transpose() * d.P[q] + d.P[q] * d.A[q] + sigma * eta / T * d.P[q];
    lam_i = std::max(lam_i, lambda_max_sym(Qi));
    lam_ii = std::max(lam_ii, lambda_max_sym(Matrix(log_average(sigma) * Pbar - d.P[q])));
  }
  // <grad_z W, F_z> = 2 e' Pz L e
  l.k_z = -lambda_max_sym(Matrix(d.Pz * d.L + d.L.transpose() * d.Pz));
  l.k1 = k1;
  l.k2 = std::max(k2, 0.0);
  l.k3 = k3;
  l.k_x = -lam_i / (sigma + 1.0);
  l.c_x = -lam_ii;
  l.k5 = 0.0;

  SwitchedLMIInstance lmi;
  lmi.A = d.A;
  lmi.P = d.P;
  lmi.lambda = d.lambda;
  lmi.sigma = sigma;
  lmi.eta = eta;
  lmi.T = T;
  lmi.L = d.L;
  lmi.Pz = d.Pz;
  s.lmi = lmi;

  s.flow_mode = FlowMode::nonstrict;
  s.jump_mode = JumpMode::thm2_relaxed;
  s.claims_stability = true;
  s.default_radius = 1.0;
  s.init_set = [M, T](double R) -> InitialSampler {
    return [M, T, R](RandomStream& st) {
      Draw d = st.next();
      const Vector xi = ball_point(d, 2, R);
      const Vector e = ball_point(d, 2, R);
      Vector x(4);
      x << xi, d.uniform() < 0.5 ? 1.0 : 2.0, T * d.uniform();
      return StateVector(x, M * xi + e);
    };
  };
  for (double a : linspace(-2, 2, 9))
    for (double b : linspace(-2, 2, 9))
      for (double q : {1.0, 2.0})
        for (double e1 : {-1.0, 0.0, 1.0})
          for (double e2 : {-1.0, 0.0, 1.0}) {
            const Vector xi = vec2(a, b);
            const Vector z = M * xi + vec2(e1, e2);
            for (double tau : {0.0, 0.5 * T, T}) {
              Vector x(4);
              x << xi, q, tau;
              s.flow_grid.emplace_back(x, z);
              if (tau == 0.0) s.jump_grid.emplace_back(x, z);
            }
          }
  s.notes = {
      {"A_tilde", "open-loop mode matrices"},
      {"B", "input matrices of the two modes"},
      {"L", "fast plant matrix, -I"},
      {"H", "fast plant input matrix"},
      {"T", "dwell-time bound; tau+ ~ U[0, T]"},
      {"lambda1", "probability of mode 1 at each switch"},
      {"eta", "timer decay rate bound; F_tau = [-eta, 0]"},
      {"P", "mode Lyapunov matrices; A_q' P_q + P_q A_q = -I"},
      {"Pz", "fast Lyapunov matrix, L' Pz + Pz L = -I"},
      {"sigma", "timer scaling from the feasibility search"},
      {"k_x", "-(sigma+1)^-1 max_q lambda_max(A_q' P_q + P_q A_q + sigma eta P_q / T)"},
      {"k_z", "-lambda_max(L' Pz + Pz L)"},
      {"k1", "2 sigma_max(A_q) sigma_max(H' L^-T Pz), max over q"},
      {"k2", "2 lambda_max(Sym(B_q' H' L^-T Pz)), max over q"},
      {"k3", "2 sigma_max(P_q) sigma_max(B_q), max over q"},
      {"c_x", "-max_q lambda_max(log(1+sigma)/sigma Pbar - P_q)"},
      {"k5", "jumps leave W unchanged"},
  };
  return s;
}

// ---------------------------------------------------------------------------
// Heavy-ball feedback optimization

Scenario build_heavy_ball(double eps, const json& p) {
  const double beta = param(p, "beta");
  const double rho = param(p, "rho");
  const double T = param(p, "T");
  if (!(beta > 0.0)) throw std::invalid_argument("heavy_ball: beta must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("heavy_ball: rho must lie in (0, 1)");
  if (!(T > 0.0)) throw std::invalid_argument("heavy_ball: T must be positive");
  const Matrix A = -Matrix::Identity(2, 2);
  const Matrix B = Matrix::Identity(2, 2);
  const Matrix H = Matrix::Identity(2, 2);
  const Matrix L = Matrix::Identity(2, 2);
  const Vector d = vec2(1.0, -1.0);
  const Matrix Pw = 0.5 * Matrix::Identity(2, 2);
  const Matrix S = -A.inverse() * B;  // steady state z = S u
  // phi(u) = u'u + (H S u + d)'(H S u + d)
  const Matrix HS = H * L * S;
  const Matrix hess = 2.0 * (Matrix::Identity(2, 2) + HS.transpose() * HS);
  const Vector u_star = hess.ldlt().solve(-2.0 * HS.transpose() * d);
  auto phi = [HS, d](const Vector& u) { return u.squaredNorm() + (HS * u + d).squaredNorm(); };
  const double phi_star = phi(u_star);

  Scenario s;
  SPSystem& sys = s.system;
  sys.name = "heavy_ball";
  sys.n_x = 5;  // (u1, u2, p1, p2, tau)
  sys.n_z = 2;
  sys.epsilon = eps;
  sys.flow_set = SetPredicate([T](const StateVector& y) { return interval_membership(y.x[4], 0.0, T); });
  sys.jump_set = SetPredicate([T](const StateVector& y) { return std::abs(y.x[4] - T); },
                              [T](const StateVector& y) { return y.x[4] - T; });
  sys.flow_x.eval = [beta, H, L, d](const StateVector& y, double) {
    const Vector u = y.x.head(2);
    const Vector pm = y.x.segment(2, 2);
    Vector f(5);
    f.head(2) = pm;
    f.segment(2, 2) = -beta * pm - 2.0 * u - 2.0 * H.transpose() * (L * y.z + d);
    f[4] = 1.0;
    return f;
  };
  sys.flow_z.eval = [A, B](const StateVector& y, double) { return Vector(A * y.z + B * y.x.head(2)); };
  sys.jump_map.set_valued = true;
  sys.jump_map.eval = [rho](const StateVector& y, const Vector& v, double lambda) {
    StateVector g = y;
    g.x.segment(2, 2) *= lambda * rho;
    g.x[4] = v[0];
    return g;
  };
  sys.measure = JumpMeasure::truncated_exponential(T);
  Matrix gain = Matrix::Zero(2, 5);
  gain.leftCols(2) = S;
  sys.manifold = Manifold::affine(gain, Vector::Zero(2));

  CertificateData& c = s.cert;
  c.V = [phi, phi_star](const Vector& x) {
    return 0.5 * x.segment(2, 2).squaredNorm() + phi(x.head(2)) - phi_star;
  };
  c.V_grad = [HS, d](const Vector& x) {
    const Vector u = x.head(2);
    Vector g = Vector::Zero(5);
    g.head(2) = 2.0 * u + 2.0 * HS.transpose() * (HS * u + d);
    g.segment(2, 2) = x.segment(2, 2);
    return g;
  };
  auto dev = [S](const StateVector& y) { return Vector(y.z - S * y.x.head(2)); };
  c.W = [dev, Pw](const StateVector& y) {
    const Vector e = dev(y);
    return e.dot(Pw * e);
  };
  c.W_grad_x = [dev, Pw, S](const StateVector& y) {
    Vector g = Vector::Zero(5);
    g.head(2) = -2.0 * S.transpose() * Pw * dev(y);
    return g;
  };
  c.W_grad_z = [dev, Pw](const StateVector& y) { return Vector(2.0 * Pw * dev(y)); };
  c.manifold_distance = [dev](const StateVector& y) { return dev(y).norm(); };
  c.phi_x = [](const Vector& x) { return x.segment(2, 2).norm(); };
  c.phi_z = [](double r) { return r; };
  c.alpha1 = c.alpha2 = [](double r) { return 0.5 * r * r; };
  const double m = 0.5 * std::min(1.0, lambda_min_sym(hess));
  const double M = 0.5 * std::max(1.0, lambda_max_sym(hess));
  c.alpha3 = [m](double r) { return m * r * r; };
  c.alpha4 = [M](double r) { return M * r * r; };
  c.dist_A = [u_star](const Vector& x) {
    return std::sqrt((x.head(2) - u_star).squaredNorm() + x.segment(2, 2).squaredNorm());
  };
  c.rho_x = c.rho5 = [](const Vector& x) { return x.segment(2, 2).squaredNorm(); };

  ConstantsLedger& l = s.ledger;
  l.k_x = beta;
  l.k_z = -lambda_max_sym(Matrix(A.transpose() * Pw + Pw * A));
  l.k1 = 2.0 * sigma_max(Matrix(B.transpose() * A.inverse().transpose() * Pw));
  l.k2 = 0.0;
  l.k3 = sigma_max(H) * sigma_max(L) * 2.0;  // Lipschitz constant of grad phi_y is 2
  l.c_x = 0.5 * (1.0 - rho * rho);
  l.k5 = 0.0;

  s.flow_mode = FlowMode::nonstrict;
  s.jump_mode = JumpMode::thm2_relaxed;
  // The jump residuals do not depend on the timer draw, and the sup over the
  // reset factor sits at an endpoint; coarse rules keep the check fast.
  s.jump_options.method = ExpectationMethod::quadrature(8);
  s.jump_options.parameter_grid = 21;
  s.claims_stability = true;
  s.default_radius = 3.0;
  s.init_set = [S, T](double R) -> InitialSampler {
    return [S, T, R](RandomStream& st) {
      Draw dr = st.next();
      const Vector up = ball_point(dr, 4, R);
      const Vector e = ball_point(dr, 2, R);
      Vector x(5);
      x << up, T * dr.uniform();
      return StateVector(x, S * up.head(2) + e);
    };
  };
  for (double a : linspace(-2, 2, 5))
    for (double b : linspace(-2, 2, 5))
      for (double p1 : {-1.0, 0.0, 1.0})
        for (double p2 : {-1.0, 0.0, 1.0})
          for (double e1 : {-1.0, 0.0, 1.0})
            for (double e2 : {-1.0, 0.0, 1.0}) {
              const Vector u = vec2(a, b);
              const Vector z = S * u + vec2(e1, e2);
              for (double tau : {0.0, 0.5 * T, T}) {
                Vector x(5);
                x << u, p1, p2, tau;
                s.flow_grid.emplace_back(x, z);
                if (tau == T && std::abs(a) != 1.0 && std::abs(b) != 1.0) s.jump_grid.emplace_back(x, z);
              }
            }
  s.notes = {
      {"A", "plant matrix -I"},
      {"B", "plant input matrix I"},
      {"H", "output-to-cost matrix I"},
      {"d", "output offset (1, -1)"},
      {"T", "timer length; tau+ ~ truncated exponential on [0, T]"},
      {"beta", "damping; any positive value works, default 1"},
      {"rho", "momentum reset bound p+ in [0, rho] p; default 0.5"},
      {"u_star", "minimizer of u'u + (u + d)'(u + d)"},
      {"k_x", "damping beta: <grad V, f~> = -beta |p|^2"},
      {"k_z", "-lambda_max(A' P + P A) with P = I/2"},
      {"k1", "2 sigma_max(B' A^-T P)"},
      {"k2", "no quadratic fast term in grad_x W along F_x"},
      {"k3", "sigma_max(H) sigma_max(L) times the Lipschitz constant 2 of grad phi_y"},
      {"c_x", "(1 - rho^2)/2 from the worst-case reset"},
      {"k5", "jumps leave W unchanged"},
  };
  return s;
}

// ---------------------------------------------------------------------------
// Gradient feedback optimization of a fast switching plant

Scenario build_switching_plant(double eps, const json& p) {
  const double T = param(p, "T");
  const double eta = param(p, "eta");
  const double a_u = param(p, "a_u");
  const double a_y = param(p, "a_y");
  const double l1 = param(p, "lambda1");
  if (!(a_u > 0.0 && a_y >= 0.0)) throw std::invalid_argument("switching_plant: need a_u > 0, a_y >= 0");
  if (!(l1 > 0.0 && l1 < 1.0)) throw std::invalid_argument("switching_plant: lambda1 must lie in (0, 1)");
  const std::vector<Matrix> A = {mat2(-1, 3, 0, -1), mat2(-1, 0, -3, -1)};
  const std::vector<Matrix> P = {mat2(0.5, 0.75, 0.75, 2.75), mat2(2.75, -0.75, -0.75, 0.5)};
  const std::vector<double> lambda = {l1, 1.0 - l1};
  const Matrix B = -Matrix::Identity(2, 2);
  const Matrix L = Matrix::Identity(2, 2);
  const Matrix H = -L * B;
  const Vector d = vec2(1.0, -1.0);
  const FeasibilityResult feas = feasibility_search(A, P, lambda, T, param(p, "safety"));
  const double sigma = feas.sigma;

  const Matrix hess = 2.0 * a_u * Matrix::Identity(2, 2) + 2.0 * a_y * H.transpose() * H;
  const Vector x_star = hess.ldlt().solve(-2.0 * a_y * H.transpose() * d);
  auto phi = [a_u, a_y, H, d](const Vector& x) {
    return a_u * x.squaredNorm() + a_y * (H * x + d).squaredNorm();
  };
  const double phi_star = phi(x_star);
  const double L_phi = lambda_max_sym(hess);
  const double m_phi = lambda_min_sym(hess);
  const double L_phiy = 2.0 * a_y;

  Scenario s;
  SPSystem& sys = s.system;
  sys.name = "switching_plant";
  sys.n_x = 2;
  sys.n_z = 4;  // (xi1, xi2, q, tau)
  sys.epsilon = eps;
  sys.flow_set = SetPredicate([T](const StateVector& y) {
    return std::max(lattice_membership(y.z[2], {1.0, 2.0}), interval_membership(y.z[3], 0.0, T));
  });
  sys.jump_set = SetPredicate(
      [](const StateVector& y) {
        return std::max(lattice_membership(y.z[2], {1.0, 2.0}), std::abs(y.z[3]));
      },
      [](const StateVector& y) { return y.z[3]; });
  sys.flow_x.eval = [a_u, a_y, H, L, d](const StateVector& y, double) {
    return Vector(-2.0 * a_u * y.x - 2.0 * a_y * H.transpose() * (L * y.z.head(2) + d));
  };
  sys.flow_z.set_valued = true;
  sys.flow_z.eval = [A, B, eta](const StateVector& y, double lambda) {
    Vector f = Vector::Zero(4);
    f.head(2) = A[mode_index(y.z[2])] * (y.z.head(2) + B * y.x);
    f[3] = -lambda * eta;
    return f;
  };
  sys.jump_map.eval = [](const StateVector& y, const Vector& v, double) {
    StateVector g = y;
    g.z[2] = v[0];
    g.z[3] = v[1];
    return g;
  };
  sys.measure = JumpMeasure::product(
      {JumpMeasure::discrete_scalar({1.0, 2.0}, lambda), JumpMeasure::uniform_interval(0.0, T)});
  Matrix sel = Matrix::Zero(2, 4);
  sel.leftCols(2) = Matrix::Identity(2, 2);
  sys.manifold = Manifold::partial(sel, -B, Vector::Zero(2), [T](const Vector&) {
    std::vector<Vector> free;
    for (double q : {1.0, 2.0})
      for (double tau : {0.0, T}) {
        Vector w = Vector::Zero(4);
        w[2] = q;
        w[3] = tau;
        free.push_back(w);
      }
    return free;
  });

  CertificateData& c = s.cert;
  c.V = [phi, phi_star](const Vector& x) { return phi(x) - phi_star; };
  c.V_grad = [hess, x_star](const Vector& x) { return Vector(hess * (x - x_star)); };
  auto dev = [B](const StateVector& y) { return Vector(y.z.head(2) + B * y.x); };
  c.W = [dev, P, sigma, T](const StateVector& y) {
    const Vector e = dev(y);
    return timer_factor(sigma, y.z[3], T) * e.dot(P[mode_index(y.z[2])] * e);
  };
  c.W_grad_x = [dev, P, B, sigma, T](const StateVector& y) {
    const Vector e = dev(y);
    return Vector(2.0 * timer_factor(sigma, y.z[3], T) * B.transpose() * P[mode_index(y.z[2])] * e);
  };
  c.W_grad_z = [dev, P, sigma, T](const StateVector& y) {
    const Vector e = dev(y);
    const Matrix& Pq = P[mode_index(y.z[2])];
    const double cf = timer_factor(sigma, y.z[3], T);
    Vector g = Vector::Zero(4);
    g.head(2) = 2.0 * cf * Pq * e;
    g[3] = -cf * cf * sigma / T * e.dot(Pq * e);
    return g;
  };
  c.manifold_distance = [dev](const StateVector& y) { return dev(y).norm(); };
  c.phi_x = [x_star](const Vector& x) { return (x - x_star).norm(); };
  c.phi_z = [](double r) { return r; };
  double p_min = 1e300, p_max = 0.0, sP = 0.0, lam_i = -1e300, lam_ii = -1e300;
  const Matrix Pbar = lambda[0] * P[0] + lambda[1] * P[1];
  for (int q = 0; q < 2; ++q) {
    p_min = std::min(p_min, lambda_min_sym(P[q]));
    p_max = std::max(p_max, lambda_max_sym(P[q]));
    sP = std::max(sP, sigma_max(P[q]));
    const Matrix Qq = A[q].transpose() * P[q] + P[q] * A[q] + sigma * eta / T * P[q];
    lam_i = std::max(lam_i, lambda_max_sym(Qq));
    lam_ii = std::max(lam_ii, lambda_max_sym(Matrix(log_average(sigma) * Pbar - P[q])));
  }
  c.alpha1 = [p_min, sigma](double r) { return p_min / (sigma + 1.0) * r * r; };
  c.alpha2 = [p_max](double r) { return p_max * r * r; };
  c.alpha3 = [m_phi](double r) { return 0.5 * m_phi * r * r; };
  c.alpha4 = [L_phi](double r) { return 0.5 * L_phi * r * r; };
  c.dist_A = [x_star](const Vector& x) { return (x - x_star).norm(); };
  c.rho_z = c.rho6 = [](double r) { return r * r; };
  c.discrete_z = {2};

  ConstantsLedger& l = s.ledger;
  l.k_x = m_phi * m_phi;
  l.k_z = -lam_i / (sigma + 1.0);
  l.c_z = -lam_ii;
  l.k1 = 2.0 * L_phi * sigma_max(B) * sP;
  l.k2 = 2.0 * L_phi * L_phiy * sigma_max(B) * sigma_max(L) * sigma_max(H) * sP;
  l.k3 = sigma_max(H) * sigma_max(L) * L_phiy * L_phi;
  l.k6 = 0.0;

  SwitchedLMIInstance lmi;
  lmi.A = A;
  lmi.P = P;
  lmi.lambda = lambda;
  lmi.sigma = sigma;
  lmi.eta = eta;
  lmi.T = T;
  s.lmi = lmi;

  s.flow_mode = FlowMode::nonstrict;
  s.jump_mode = JumpMode::thm2_relaxed;
  s.claims_stability = true;
  s.default_radius = 1.0;
  s.init_set = [B, T](double R) -> InitialSampler {
    return [B, T, R](RandomStream& st) {
      Draw dr = st.next();
      const Vector x = ball_point(dr, 2, R);
      const Vector e = ball_point(dr, 2, R);
      Vector z(4);
      z << e - B * x, dr.uniform() < 0.5 ? 1.0 : 2.0, T * dr.uniform();
      return StateVector(x, z);
    };
  };
  for (double a : linspace(-2, 2, 9))
    for (double b : linspace(-2, 2, 9))
      for (double q : {1.0, 2.0})
        for (double e1 : {-1.0, 0.0, 1.0})
          for (double e2 : {-1.0, 0.0, 1.0}) {
            const Vector x = vec2(a, b);
            for (double tau : {0.0, 0.5 * T, T}) {
              Vector z(4);
              z << vec2(e1, e2) - B * x, q, tau;
              s.flow_grid.emplace_back(x, z);
              if (tau == 0.0) s.jump_grid.emplace_back(x, z);
            }
          }
  s.notes = {
      {"A", "plant mode matrices"},
      {"B", "plant input matrix -I"},
      {"L", "plant output matrix I"},
      {"H", "-L B"},
      {"d", "output offset (1, -1)"},
      {"a_u", "input cost weight, phi_u = a_u |u|^2"},
      {"a_y", "output cost weight, phi_y = a_y |y|^2"},
      {"T", "dwell-time bound; tau+ ~ U[0, T]"},
      {"eta", "timer decay rate bound"},
      {"lambda1", "probability of plant mode 1 at each switch"},
      {"P", "mode Lyapunov matrices, reused from the switching scenario"},
      {"sigma", "timer scaling from the feasibility search"},
      {"x_star", "minimizer of phi"},
      {"k_x", "m_phi^2, strong convexity modulus squared"},
      {"k_z", "-(sigma+1)^-1 max_q lambda_max(A_q' P_q + P_q A_q + sigma eta P_q / T)"},
      {"c_z", "-max_q lambda_max(log(1+sigma)/sigma Pbar - P_q)"},
      {"k1", "2 L_phi sigma_max(B) max_q sigma_max(P_q)"},
      {"k2", "2 L_phi L_phiy sigma_max(B) sigma_max(L) sigma_max(H) max_q sigma_max(P_q)"},
      {"k3", "sigma_max(H) sigma_max(L) L_phiy L_phi"},
      {"k6", "jumps leave V unchanged"},
  };
  return s;
}

// ---------------------------------------------------------------------------
// Linear system with bounded stochastic inputs

struct BoundedData {
  Matrix A, B, L, H, At, P, Q;
  double chi1, c_tilde, gamma, lam, r, nu, input_radius, T;
};

BoundedData bounded_data(const json& p) {
  BoundedData d;
  d.A = mat2(-2, 2, -1, 0);
  d.B = mat2(0, 1, 1, 0);
  d.L = -Matrix::Identity(2, 2);
  d.H = mat2(1, -1, 1, 1);
  d.chi1 = param(p, "chi1");
  d.c_tilde = param(p, "c_tilde");
  d.T = param(p, "T");
  d.input_radius = param(p, "input_radius");
  if (!(d.chi1 > 0.0 && d.chi1 < 1.0)) throw std::invalid_argument("bounded_inputs: chi1 must lie in (0, 1)");
  if (!(d.c_tilde > 0.0)) throw std::invalid_argument("bounded_inputs: c_tilde must be positive");
  if (!(d.input_radius >= 0.0)) throw std::invalid_argument("bounded_inputs: input_radius must be >= 0");
  d.At = d.A - d.B * d.L.inverse() * d.H;
  const Matrix I = Matrix::Identity(2, 2);
  d.P = solve_lyapunov(d.At, I);
  d.Q = solve_lyapunov(d.L, I);
  if (!(lambda_min_sym(d.P) > 0.0) || !(lambda_min_sym(d.Q) > 0.0)) {
    throw std::invalid_argument("bounded_inputs: A~ or L is not Hurwitz");
  }
  d.lam = lambda_max_sym(Matrix(d.At.transpose() * d.P + d.P * d.At));
  if (!(d.lam < 0.0)) throw std::invalid_argument("bounded_inputs: A~' P + P A~ is not negative definite");
  d.gamma = sigma_max(d.P) * d.input_radius;  // sup over U of |P u|
  // kappa(s) = (1 - chi1) lam s^2 + 2 gamma s - chi1 lam c~^2; positive root.
  const double a = -(1.0 - d.chi1) * d.lam;
  const double c0 = -d.chi1 * d.lam * d.c_tilde * d.c_tilde;
  d.r = (d.gamma + std::sqrt(d.gamma * d.gamma + a * c0)) / a;
  // Largest value of kappa on [0, r]: the vertex.
  const double s_v = d.gamma / a;
  d.nu = -a * s_v * s_v + 2.0 * d.gamma * s_v + c0;
  return d;
}

Scenario build_bounded_inputs(double eps, const json& p) {
  const BoundedData d = bounded_data(p);
  const double T = d.T;
  const double Ru = d.input_radius;
  const Matrix M = -d.L.inverse() * d.H;

  Scenario s;
  SPSystem& sys = s.system;
  sys.name = "bounded_inputs";
  sys.n_x = 5;  // (xi1, xi2, u1, u2, tau)
  sys.n_z = 2;
  sys.epsilon = eps;
  sys.flow_set = SetPredicate([T, Ru](const StateVector& y) {
    return std::max(interval_membership(y.x[4], 0.0, T), y.x.segment(2, 2).norm() - Ru);
  });
  sys.jump_set = SetPredicate(
      [T, Ru](const StateVector& y) {
        return std::max(std::abs(y.x[4] - T), y.x.segment(2, 2).norm() - Ru);
      },
      [T](const StateVector& y) { return y.x[4] - T; });
  sys.flow_x.eval = [A = d.A, B = d.B](const StateVector& y, double) {
    Vector f = Vector::Zero(5);
    f.head(2) = A * y.x.head(2) + B * y.z + y.x.segment(2, 2);
    f[4] = 1.0;
    return f;
  };
  sys.flow_z.eval = [H = d.H, L = d.L](const StateVector& y, double) {
    return Vector(H * y.x.head(2) + L * y.z);
  };
  sys.jump_map.eval = [](const StateVector& y, const Vector& v, double) {
    StateVector g = y;
    g.x.segment(2, 2) = v;
    g.x[4] = 0.0;
    return g;
  };
  sys.measure = JumpMeasure::uniform_ball(Ru, 2);
  Matrix gain = Matrix::Zero(2, 5);
  gain.leftCols(2) = M;
  sys.manifold = Manifold::affine(gain, Vector::Zero(2));

  CertificateData& c = s.cert;
  c.V = [P = d.P](const Vector& x) { return x.head(2).dot(P * x.head(2)); };
  c.V_grad = [P = d.P](const Vector& x) {
    Vector g = Vector::Zero(5);
    g.head(2) = 2.0 * P * x.head(2);
    return g;
  };
  auto dev = [M](const StateVector& y) { return Vector(y.z - M * y.x.head(2)); };
  c.W = [dev, Q = d.Q](const StateVector& y) {
    const Vector e = dev(y);
    return e.dot(Q * e);
  };
  c.W_grad_x = [dev, Q = d.Q, M](const StateVector& y) {
    Vector g = Vector::Zero(5);
    g.head(2) = -2.0 * M.transpose() * Q * dev(y);
    return g;
  };
  c.W_grad_z = [dev, Q = d.Q](const StateVector& y) { return Vector(2.0 * Q * dev(y)); };
  c.manifold_distance = [dev](const StateVector& y) { return dev(y).norm(); };
  const double ct = d.c_tilde;
  c.phi_x = [ct](const Vector& x) { return std::sqrt(x.head(2).squaredNorm() + ct * ct); };
  c.phi_z = [](double r) { return r; };
  const double q_min = lambda_min_sym(d.Q), q_max = lambda_max_sym(d.Q);
  const double p_min = lambda_min_sym(d.P), p_max = lambda_max_sym(d.P);
  c.alpha1 = [q_min](double r) { return q_min * r * r; };
  c.alpha2 = [q_max](double r) { return q_max * r * r; };
  c.alpha3 = [p_min](double r) { return p_min * r * r; };
  c.alpha4 = [p_max](double r) { return p_max * r * r; };
  c.dist_A = [](const Vector& x) { return x.head(2).norm(); };
  const double r = d.r;
  c.in_Ox = [r](const Vector& x) { return x.head(2).norm() < r; };
  c.chi = 1.0;
  c.nu = d.nu;

  ConstantsLedger& l = s.ledger;
  const Matrix G = d.H.transpose() * d.L.inverse().transpose() * d.Q;
  l.k_x = -d.chi1 * d.lam;
  l.k_z = -lambda_max_sym(Matrix(d.L.transpose() * d.Q + d.Q * d.L));
  l.k1 = 2.0 * sigma_max(d.At) * sigma_max(G);
  l.k2 = std::max(0.0, 2.0 * lambda_max_sym(Matrix(d.B.transpose() * G)));
  l.k3 = 2.0 * sigma_max(d.P) * sigma_max(d.B);
  l.k4 = 2.0 * sigma_max(G) * Ru;

  s.flow_mode = FlowMode::recurrence;
  s.jump_mode = JumpMode::thm4;
  // Jumps only redraw u and reset tau; a small Monte Carlo rule suffices.
  s.jump_options.method = ExpectationMethod::monte_carlo(64, RandomStream(0, 0, 7));
  s.default_radius = 10.0;
  s.init_set = [M, T, Ru](double R) -> InitialSampler {
    return [M, T, Ru, R](RandomStream& st) {
      Draw dr = st.next();
      const Vector xi = ball_point(dr, 2, R);
      const Vector u = ball_point(dr, 2, Ru);
      const Vector e = ball_point(dr, 2, 1.0);
      Vector x(5);
      x << xi, u, T * dr.uniform();
      return StateVector(x, M * xi + e);
    };
  };
  const std::vector<Vector> inputs = {vec2(0, 0), vec2(Ru, 0), vec2(-0.6 * Ru, 0.8 * Ru)};
  for (double a : linspace(-20, 20, 17))
    for (double b : linspace(-20, 20, 17))
      for (const Vector& u : inputs)
        for (double e1 : {-1.0, 0.0, 1.0})
          for (double e2 : {-1.0, 0.0, 1.0}) {
            const Vector xi = vec2(a, b);
            const Vector z = M * xi + vec2(e1, e2);
            for (double tau : {0.0, T}) {
              Vector x(5);
              x << xi, u, tau;
              s.flow_grid.emplace_back(x, z);
              if (tau == T) s.jump_grid.emplace_back(x, z);
            }
          }
  s.notes = {
      {"A", "slow state matrix"},
      {"B", "slow input matrix from the fast state"},
      {"L", "fast plant matrix -I"},
      {"H", "fast plant input matrix"},
      {"A_tilde", "A - B L^-1 H"},
      {"P", "solution of A~' P + P A~ = -I"},
      {"Q", "solution of L' Q + Q L = -I"},
      {"T", "sampling period of the input; u+ ~ U(ball)"},
      {"input_radius", "radius of the input ball U"},
      {"chi1", "split of the decrease between kappa and k_x"},
      {"c_tilde", "offset in phi_x = sqrt(|xi|^2 + c~^2)"},
      {"r", "positive root of kappa; O_x = {|xi| < r}"},
      {"nu", "maximum of kappa on [0, r]"},
      {"chi", "radius of the fast neighbourhood in O_chi"},
      {"k_x", "-chi1 lambda_max(A~' P + P A~)"},
      {"k_z", "-lambda_max(L' Q + Q L)"},
      {"k1", "2 sigma_max(A~) sigma_max(H' L^-T Q)"},
      {"k2", "2 lambda_max(Sym(B' H' L^-T Q)), clipped at 0"},
      {"k3", "2 sigma_max(P) sigma_max(B)"},
      {"k4", "2 sigma_max(H' L^-T Q) sup_U |u|"},
  };
  return s;
}

// ---------------------------------------------------------------------------
// Zero dynamics

Scenario build_zero(double eps) {
  Scenario s;
  SPSystem& sys = s.system;
  sys.name = "zero";
  sys.n_x = 1;
  sys.n_z = 1;
  sys.epsilon = eps;
  sys.flow_set = SetPredicate::everything();
  sys.flow_x.eval = [](const StateVector&, double) { return Vector(Vector::Zero(1)); };
  sys.flow_z.eval = [](const StateVector&, double) { return Vector(Vector::Zero(1)); };
  sys.jump_map.eval = [](const StateVector& y, const Vector&, double) { return y; };
  sys.manifold = Manifold::partial(Matrix::Zero(0, 1), Matrix::Zero(0, 1), Vector::Zero(0), {});

  CertificateData& c = s.cert;
  c.V = [](const Vector&) { return 0.0; };
  c.V_grad = [](const Vector&) { return Vector(Vector::Zero(1)); };
  c.W = [](const StateVector&) { return 0.0; };
  c.W_grad_x = [](const StateVector&) { return Vector(Vector::Zero(1)); };
  c.W_grad_z = [](const StateVector&) { return Vector(Vector::Zero(1)); };
  c.manifold_distance = [](const StateVector&) { return 0.0; };
  c.phi_x = [](const Vector&) { return 0.0; };
  c.phi_z = [](double) { return 0.0; };
  c.dist_A = [](const Vector&) { return 0.0; };
  c.in_Ox = [](const Vector&) { return true; };

  s.ledger.k1 = s.ledger.k3 = 1.0;
  s.flow_mode = FlowMode::nonstrict;
  s.jump_mode = JumpMode::thm4;
  s.default_radius = 1.0;
  s.init_set = [](double R) -> InitialSampler {
    return [R](RandomStream& st) {
      Draw d = st.next();
      return StateVector(Vector::Constant(1, R * (2.0 * d.uniform() - 1.0)),
                         Vector::Constant(1, R * (2.0 * d.uniform() - 1.0)));
    };
  };
  for (double x : linspace(-1, 1, 5))
    for (double z : linspace(-1, 1, 5)) s.flow_grid.emplace_back(Vector::Constant(1, x), Vector::Constant(1, z));
  s.notes = {{"k1", "placeholder so that theta* is defined"}, {"k3", "placeholder so that theta* is defined"}};
  return s;
}

void finish(Scenario& s, const SystemSpec& spec) {
  const Kind& k = find_kind(spec.kind);
  s.name = k.name;
  s.description = k.description;
  s.spec = spec;
  s.config = spec.simulation;
  s.system.validate();
  s.reduced = build_reduced(s.system, 1);
  s.notes.push_back({"epsilon", "time-scale ratio"});
  for (auto it = spec.parameters.begin(); it != spec.parameters.end(); ++it) {
    const bool covered = std::any_of(s.notes.begin(), s.notes.end(),
                                     [&](const ProvenanceNote& n) { return n.field == it.key(); });
    if (!covered) s.notes.push_back({it.key(), "numeric setting of the scenario"});
  }
  for (const auto& n : s.notes) s.ledger.notes[n.field] = n.note;
  s.jump_options.grid_spec = s.jump_options.grid_spec.empty() ? "default jump grid" : s.jump_options.grid_spec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry and specs

std::vector<ScenarioInfo> list_scenarios() {
  std::vector<ScenarioInfo> out;
  for (const auto& k : kinds()) out.push_back({k.name, k.description});
  return out;
}

bool has_scenario(const std::string& name) {
  return std::any_of(kinds().begin(), kinds().end(), [&](const Kind& k) { return name == k.name; });
}

SystemSpec default_spec(const std::string& name) {
  const Kind& k = find_kind(name);
  SystemSpec s;
  s.kind = k.name;
  s.epsilon = k.epsilon;
  s.parameters = k.parameters;
  s.simulation = k.simulation;
  return s;
}

SystemSpec normalize(SystemSpec spec) {
  const Kind& k = find_kind(spec.kind);
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
  if (!spec.parameters.is_object()) throw std::invalid_argument("parameters must be an object");
  json merged = k.parameters;
  for (auto it = spec.parameters.begin(); it != spec.parameters.end(); ++it) {
    if (!k.parameters.contains(it.key())) {
      throw std::invalid_argument("unknown parameter for " + spec.kind + ": " + it.key());
    }
    if (!it.value().is_number()) throw std::invalid_argument("parameter " + it.key() + " must be a number");
    merged[it.key()] = it.value().get<double>();
  }
  spec.parameters = merged;
  spec.simulation.validate();
  return spec;
}

json to_json(const SystemSpec& spec) {
  return {{"kind", spec.kind},
          {"epsilon", spec.epsilon},
          {"parameters", spec.parameters},
          {"simulation", to_json(spec.simulation)}};
}

SystemSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("system spec must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key != "kind" && key != "epsilon" && key != "parameters" && key != "simulation") {
      throw std::invalid_argument("unknown field in system spec: " + key);
    }
  }
  SystemSpec spec = default_spec(j.at("kind").get<std::string>());
  if (j.contains("epsilon")) spec.epsilon = j.at("epsilon").get<double>();
  if (j.contains("parameters")) spec.parameters = j.at("parameters");
  if (j.contains("simulation")) spec.simulation = sim_config_from_json(j.at("simulation"), spec.simulation);
  return normalize(std::move(spec));
}

SystemSpec load_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("system spec is not valid JSON: ") + e.what());
  }
  return spec_from_json(j);
}

std::string dump_spec(const SystemSpec& spec) { return to_json(spec).dump(2) + "\n"; }

void apply_override(SystemSpec& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument("override value is not a number: " + text);
  if (key == "epsilon") {
    spec.epsilon = value;
  } else if (spec.parameters.contains(key)) {
    spec.parameters[key] = value;
  } else {
    throw std::invalid_argument("unknown parameter for " + spec.kind + ": " + key);
  }
  spec = normalize(std::move(spec));
}

Scenario build_scenario(const SystemSpec& raw, bool run_self_check) {
  const SystemSpec spec = normalize(raw);
  const json& p = spec.parameters;
  Scenario s;
  if (spec.kind == "example1") s = build_example1(spec.epsilon, p);
  else if (spec.kind == "switching") s = build_switching(spec.epsilon, p);
  else if (spec.kind == "heavy_ball") s = build_heavy_ball(spec.epsilon, p);
  else if (spec.kind == "switching_plant") s = build_switching_plant(spec.epsilon, p);
  else if (spec.kind == "bounded_inputs") s = build_bounded_inputs(spec.epsilon, p);
  else s = build_zero(spec.epsilon);
  finish(s, spec);
  if (run_self_check) {
    const SelfCheckResult r = self_check(s);
    if (!r.pass) throw std::runtime_error("scenario " + s.name + " failed its self-check: " + r.failure);
  }
  return s;
}

Scenario make_scenario(const std::string& name, std::optional<double> epsilon, bool run_self_check) {
  SystemSpec spec = default_spec(name);
  if (epsilon) {
    spec.epsilon = *epsilon;
    spec.simulation.step_h = std::min(spec.simulation.step_h, *epsilon / 20.0);
  }
  return build_scenario(spec, run_self_check);
}

namespace {

std::string describe_failure(const VerificationReport& r) {
  const InequalityResult* w = r.worst();
  std::ostringstream os;
  os << r.kind << " inequality " << (w ? w->name : std::string("?"));
  if (w && w->evaluated > 0) {
    os << " failed (max residual " << w->max_residual;
    if (w->worst_point.dimension() > 0) {
      os << " at x = " << format_vector(w->worst_point.x) << ", z = " << format_vector(w->worst_point.z);
    }
    os << ")";
  } else {
    os << " failed";
  }
  return os.str();
}

}  // namespace

SelfCheckResult self_check(const Scenario& s) {
  SelfCheckResult out;
  auto add = [&](VerificationReport r) {
    if (out.pass && !r.pass()) {
      out.pass = false;
      out.failure = describe_failure(r);
    }
    out.reports.push_back(std::move(r));
  };
  if (s.lmi) {
    LMIReport lr = check_switched_lmis(*s.lmi);
    if (!lr.pass()) {
      const LMIEntry& w = lr.worst();
      std::ostringstream os;
      os << "LMI " << w.name << " failed";
      if (w.mode > 0) os << " for mode " << w.mode;
      os << " (lambda_max = " << w.lambda_max << ")";
      out.pass = false;
      out.failure = os.str();
    }
    out.lmi = lr;
  }
  const double theta = s.theta();
  add(verify_sandwich(s.cert, s.flow_grid));
  FlowVerifyOptions fo;
  fo.grid_spec = "default flow grid";
  add(verify_flow_decrease(s.system, s.cert, s.ledger, theta, s.flow_grid, s.flow_mode, fo));
  add(verify_jump_decrease(s.system, s.cert, s.ledger, theta, s.jump_grid, s.jump_mode, s.jump_options));
  return out;
}

Scenario scenario_example1(double epsilon) { return make_scenario("example1", epsilon, false); }
Scenario scenario_switching(double epsilon) { return make_scenario("switching", epsilon, false); }
Scenario scenario_heavy_ball(double epsilon) { return make_scenario("heavy_ball", epsilon, false); }
Scenario scenario_switching_plant(double epsilon) {
  return make_scenario("switching_plant", epsilon, false);
}
Scenario scenario_bounded_inputs(double epsilon) {
  return make_scenario("bounded_inputs", epsilon, false);
}
Scenario scenario_zero() { return make_scenario("zero", std::nullopt, false); }

double example1_rho_tilde(double x, double z) {
  const double up = std::max(x + 1.0, 0.0);
  const double down = std::max(x - 1.0, 0.0);
  return 0.25 * (x * x + (z + x) * (z + x)) - (3.0 / 80.0) * up * up - (17.0 / 80.0) * down * down;
}

}  // namespace shds
