#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "shds/jacobi.hpp"

using namespace shds;

TEST(Jacobi, DiagonalAndKnownSpectra) {
  Eigen::Matrix2d d;
  d << 3, 0, 0, -1;
  const auto e = jacobi_eigenvalues(d);
  EXPECT_EQ(e[0], -1.0);
  EXPECT_EQ(e[1], 3.0);
  Eigen::Matrix2d m;
  m << 2, 1, 1, 2;
  const auto f = jacobi_eigenvalues(m);
  EXPECT_NEAR(f[0], 1.0, 1e-14);
  EXPECT_NEAR(f[1], 3.0, 1e-14);
}

TEST(Jacobi, MatchesEigenOnRandomSymmetricMatrices) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N(0.0, 3.0);
  for (int n = 1; n <= 8; ++n) {
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::MatrixXd a(n, n);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k <= i; ++k) a(i, k) = a(k, i) = N(rng);
      const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
      const Eigen::VectorXd got = jacobi_eigenvalues(a);
      EXPECT_LT((ref - got).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, a.norm()));
    }
  }
}

TEST(Jacobi, RejectsNonSquare) {
  EXPECT_THROW(jacobi_eigenvalues(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(Helpers, SymmetricPartLambdaAndSigma) {
  Eigen::Matrix2d a;
  a << -1, 3, 0, -1;
  const Eigen::MatrixXd s = symmetric_part(a);
  EXPECT_DOUBLE_EQ(s(0, 1), 1.5);
  EXPECT_NEAR(lambda_max_sym(a), 0.5, 1e-14);
  EXPECT_NEAR(lambda_min_sym(a), -2.5, 1e-14);
  // sigma_max of [[-1,3],[0,-1]]: sqrt of the largest root of t^2 - 11 t + 1.
  EXPECT_NEAR(sigma_max(a), std::sqrt((11.0 + std::sqrt(117.0)) / 2.0), 1e-13);
}
