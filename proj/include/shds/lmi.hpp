#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shds/core.hpp"

namespace shds {

inline constexpr double kDefiniteTolerance = 1e-10;  // tol_pd

struct DefinitenessResult {
  bool negative_definite = false;
  double lambda_max_sym = 0.0;
};

// lambda_max of Sym(M); verdict lambda_max < -tol_pd.
DefinitenessResult check_negative_definite(const Matrix& m);

struct SwitchedLMIInstance {
  std::vector<Matrix> A;  // mode matrices A_q
  std::vector<Matrix> P;  // mode certificates P_q
  std::vector<double> lambda;
  double sigma = 1.0;
  double eta = 0.0;
  double T = 1.0;
  std::optional<Matrix> L;
  std::optional<Matrix> Pz;

  void validate() const;
  Matrix average_P() const;
};

struct LMIEntry {
  std::string name;  // "(i)", "(ii)", "(iii)"
  int mode = -1;     // -1 when not mode-specific
  double lambda_max = 0.0;
  bool pass = false;
};

struct LMIReport {
  std::vector<LMIEntry> entries;

  bool pass() const;
  bool pass(const std::string& name) const;
  // Entry with the largest lambda_max among failures (or overall).
  const LMIEntry& worst() const;
};

LMIReport check_switched_lmis(const SwitchedLMIInstance& instance);

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeasibilityResult {
  double sigma = 0.0;
  double eta_bar = 0.0;
  double margin = 0.0;  // min_q lambda_min(P^-1/2 P_q P^-1/2)
};

// Doubling to bracket sigma, then bisection down to the smallest sigma with
// sigma^-1 log(1 + sigma) < safety * margin. eta_bar from the Weyl bound.
// The returned pair is re-verified at eta_bar / 2.
FeasibilityResult feasibility_search(const std::vector<Matrix>& A, const std::vector<Matrix>& P,
                                     const std::vector<double>& lambda, double T,
                                     double safety = 0.9);

// Solves A^T X + X A = -Q for symmetric X (Kronecker form).
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

// Log-average factor sigma^-1 log(1 + sigma) (-> 1 as sigma -> 0).
double log_average(double sigma);

}  // namespace shds
