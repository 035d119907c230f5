#include "shds/lmi.hpp"

#include <cmath>
#include <sstream>

#include "shds/jacobi.hpp"

namespace shds {

DefinitenessResult check_negative_definite(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "check_negative_definite: matrix is " << m.rows() << "x" << m.cols() << ", not square";
    throw std::invalid_argument(os.str());
  }
  if (!m.allFinite()) throw std::invalid_argument("check_negative_definite: non-finite entries");
  DefinitenessResult r;
  r.lambda_max_sym = lambda_max_sym(m);
  r.negative_definite = r.lambda_max_sym < -kDefiniteTolerance;
  return r;
}

void SwitchedLMIInstance::validate() const {
  if (A.empty() || A.size() != P.size() || A.size() != lambda.size()) {
    throw std::invalid_argument("SwitchedLMIInstance: A, P and lambda must have equal length");
  }
  double total = 0.0;
  for (std::size_t q = 0; q < A.size(); ++q) {
    if (A[q].rows() != A[q].cols() || P[q].rows() != A[q].rows() || P[q].cols() != A[q].cols()) {
      throw std::invalid_argument("SwitchedLMIInstance: mode matrices must be square and conformal");
    }
    if ((P[q] - P[q].transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      std::ostringstream os;
      os << "SwitchedLMIInstance: P_" << q + 1 << " is not symmetric";
      throw std::invalid_argument(os.str());
    }
    if (!(lambda_min_sym(P[q]) > 0.0)) {
      std::ostringstream os;
      os << "SwitchedLMIInstance: P_" << q + 1 << " is not positive definite";
      throw std::invalid_argument(os.str());
    }
    if (!(lambda[q] >= 0.0)) throw std::invalid_argument("SwitchedLMIInstance: negative weight");
    total += lambda[q];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("SwitchedLMIInstance: weights must sum to 1");
  }
  if (!(sigma > 0.0) || !(eta >= 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("SwitchedLMIInstance: requires sigma > 0, eta >= 0, T > 0");
  }
  if (L.has_value() != Pz.has_value()) {
    throw std::invalid_argument("SwitchedLMIInstance: fast pair needs both L and P_z");
  }
}

Matrix SwitchedLMIInstance::average_P() const {
  Matrix avg = Matrix::Zero(P.front().rows(), P.front().cols());
  for (std::size_t q = 0; q < P.size(); ++q) avg += lambda[q] * P[q];
  return avg;
}

bool LMIReport::pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

bool LMIReport::pass(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name && !e.pass) return false;
  return true;
}

const LMIEntry& LMIReport::worst() const {
  if (entries.empty()) throw std::logic_error("LMIReport: no entries");
  const LMIEntry* worst = &entries.front();
  for (const auto& e : entries) {
    if ((!e.pass && worst->pass) || (e.pass == worst->pass && e.lambda_max > worst->lambda_max)) {
      worst = &e;
    }
  }
  return *worst;
}

double log_average(double sigma) {
  if (sigma < 1e-8) return 1.0 - 0.5 * sigma;
  return std::log1p(sigma) / sigma;
}

LMIReport check_switched_lmis(const SwitchedLMIInstance& instance) {
  instance.validate();
  LMIReport report;
  const Matrix P = instance.average_P();
  const double avg = log_average(instance.sigma);
  for (std::size_t q = 0; q < instance.A.size(); ++q) {
    const Matrix& A = instance.A[q];
    const Matrix& Pq = instance.P[q];
    const Matrix m1 = A.transpose() * Pq + Pq * A + (instance.sigma * instance.eta / instance.T) * Pq;
    const auto r1 = check_negative_definite(m1);
    report.entries.push_back({"(i)", static_cast<int>(q) + 1, r1.lambda_max_sym, r1.negative_definite});
    const auto r2 = check_negative_definite(avg * P - Pq);
    report.entries.push_back({"(ii)", static_cast<int>(q) + 1, r2.lambda_max_sym, r2.negative_definite});
  }
  if (instance.L && instance.Pz) {
    const Matrix& L = *instance.L;
    const Matrix& Pz = *instance.Pz;
    const auto r3 = check_negative_definite(L.transpose() * Pz + Pz * L);
    report.entries.push_back({"(iii)", -1, r3.lambda_max_sym, r3.negative_definite});
  }
  return report;
}

FeasibilityResult feasibility_search(const std::vector<Matrix>& A, const std::vector<Matrix>& P,
                                     const std::vector<double>& lambda, double T, double safety) {
  if (A.empty() || A.size() != P.size() || A.size() != lambda.size()) {
    throw std::invalid_argument("feasibility_search: A, P and lambda must have equal length");
  }
  if (!(T > 0.0)) throw std::invalid_argument("feasibility_search: T must be positive");
  if (!(safety > 0.0 && safety <= 1.0)) {
    throw std::invalid_argument("feasibility_search: safety factor must lie in (0, 1]");
  }
  double min_decay = std::numeric_limits<double>::infinity();
  double max_p = 0.0;
  for (std::size_t q = 0; q < A.size(); ++q) {
    std::ostringstream mode;
    mode << "mode " << q + 1;
    if ((P[q] - P[q].transpose()).cwiseAbs().maxCoeff() > 1e-12 || !(lambda_min_sym(P[q]) > 0.0)) {
      throw InfeasibleError("feasibility_search: P_q is not symmetric positive definite in " +
                            mode.str());
    }
    const auto lyap = check_negative_definite(A[q].transpose() * P[q] + P[q] * A[q]);
    if (!lyap.negative_definite) {
      throw InfeasibleError("feasibility_search: A_q^T P_q + P_q A_q is not negative definite in " +
                            mode.str());
    }
    min_decay = std::min(min_decay, -lyap.lambda_max_sym);
    max_p = std::max(max_p, lambda_max_sym(P[q]));
  }

  SwitchedLMIInstance inst;
  inst.A = A;
  inst.P = P;
  inst.lambda = lambda;
  inst.T = T;
  const Matrix Pbar = inst.average_P();

  // lambda_min(P^-1/2 P_q P^-1/2) through the congruent form L^-1 P_q L^-T.
  Eigen::LLT<Matrix> llt(Pbar);
  if (llt.info() != Eigen::Success) throw InfeasibleError("feasibility_search: P is not positive definite");
  const Matrix Linv = llt.matrixL().solve(Matrix::Identity(Pbar.rows(), Pbar.cols()));
  double margin = std::numeric_limits<double>::infinity();
  for (const Matrix& Pq : P) {
    margin = std::min(margin, lambda_min_sym(Matrix(Linv * Pq * Linv.transpose())));
  }
  const double target = safety * margin;

  double hi = 1.0;
  int doublings = 0;
  while (!(log_average(hi) < target)) {
    hi *= 2.0;
    if (++doublings > 200) throw InfeasibleError("feasibility_search: no sigma satisfies (ii)");
  }
  double lo = doublings == 0 ? 0.0 : hi / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_average(mid) < target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  FeasibilityResult result;
  result.sigma = hi;
  result.margin = margin;
  result.eta_bar = min_decay * T / (hi * max_p);

  inst.sigma = result.sigma;
  inst.eta = 0.5 * result.eta_bar;
  const LMIReport check = check_switched_lmis(inst);
  if (!check.pass()) {
    const LMIEntry& w = check.worst();
    std::ostringstream os;
    os << "feasibility_search: returned pair fails LMI " << w.name << " in mode " << w.mode;
    throw InfeasibleError(os.str());
  }
  return result;
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  const Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimensions do not match");
  }
  const Matrix I = Matrix::Identity(n, n);
  Matrix K = Matrix::Zero(n * n, n * n);
  // vec(A^T X + X A) = (I (x) A^T + A^T (x) I) vec(X), column-major vec.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(Matrix(Q).data(), n * n);
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw std::invalid_argument("solve_lyapunov: singular Lyapunov operator");
  const Vector x = lu.solve(rhs);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return symmetric_part(X);
}

}  // namespace shds
