#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hsreg/hilbert_scale.hpp"
#include "oracles.hpp"

using namespace hsreg;
using hsreg::testing::random_vector;
using hsreg::testing::to_eigen;

TEST(ScaleOperator, EigenvaluesApproximateIntegers) {
  const ScaleOperator s = build_scale_operator(400);
  const double r1 = s.mu()[0] / 1.0;
  const double r10 = s.mu()[9] / 10.0;
  EXPECT_GE(r1, 0.999);
  EXPECT_LE(r1, 1.0);
  EXPECT_GE(r10, 0.999);
  EXPECT_LE(r10, 1.0);
  // Direct evaluation (m+1)/pi sqrt(2 - 2cos(k pi/(m+1))).
  for (std::size_t k : {1u, 10u, 200u}) {
    const double ref = 401.0 / M_PI * std::sqrt(2.0 - 2.0 * std::cos(k * M_PI / 401.0));
    EXPECT_NEAR(s.mu()[k - 1], ref, 1e-12 * ref);
  }
  for (std::size_t k = 1; k < 400; ++k) EXPECT_LT(s.mu()[k - 1], s.mu()[k]);
  EXPECT_THROW(build_scale_operator(0), Error);
}

TEST(ScaleOperator, PowerIdentities) {
  const ScaleOperator s(60);
  std::mt19937_64 rng(1);
  const Vector x = random_vector(60, rng);
  const Vector x0 = apply_power(s, 0.0, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x0[i], x[i], 1e-13);
  const Vector back = apply_power(s, 1.7, apply_power(s, -1.7, x));
  EXPECT_LT(norm2(subtract(back, x)) / norm2(x), 1e-10);

  const Vector v1 = s.eigen().eigenvectors.column(0);
  const Vector b2v = apply_power(s, 2.0, v1);
  const double mu1 = s.mu()[0];
  for (std::size_t i = 0; i < v1.size(); ++i) EXPECT_NEAR(b2v[i], mu1 * mu1 * v1[i], 1e-12);
  EXPECT_THROW(apply_power(s, 1.0, Vector(59, 0.0)), Error);
}

TEST(ScaleOperator, Semigroup) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> expo(-4.0, 4.0);
  for (std::size_t m : {10u, 75u, 200u}) {
    const ScaleOperator s(m);
    for (int trial = 0; trial < 5; ++trial) {
      const double r1 = expo(rng);
      const double r2 = expo(rng);
      const Vector x = random_vector(m, rng);
      const Vector lhs = apply_power(s, r1, apply_power(s, r2, x));
      const Vector rhs = apply_power(s, r1 + r2, x);
      EXPECT_LT(norm2(subtract(lhs, rhs)) / norm2(rhs), 1e-9) << m << " " << r1 << " " << r2;
    }
  }
}

TEST(ScaleOperator, Norms) {
  const ScaleOperator s(50);
  std::mt19937_64 rng(4);
  const Vector x = random_vector(50, rng);
  EXPECT_NEAR(scale_norm(s, 0.0, x), norm2(x), 1e-13);
  EXPECT_EQ(scale_norm(s, 1.0, Vector(50, 0.0)), 0.0);
  for (std::size_t k : {0u, 7u, 49u}) {
    const Vector v = s.eigen().eigenvectors.column(k);
    for (double r : {-2.0, 0.5, 3.0}) {
      EXPECT_NEAR(scale_norm(s, r, v), std::pow(s.mu()[k], r), 1e-10 * std::pow(s.mu()[k], r));
    }
  }
}

TEST(ScaleOperator, PowerMatrix) {
  const std::size_t m = 40;
  const ScaleOperator s(m);
  const DenseMatrix b2 = power_matrix(s, 2.0);
  const double scale = 41.0 * 41.0 / (M_PI * M_PI);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double ref = i == j ? 2.0 * scale : (i + 1 == j || j + 1 == i ? -scale : 0.0);
      EXPECT_NEAR(b2(i, j), ref, 1e-8 * 2.0 * scale);
    }
  }
  EXPECT_LT(max_abs_diff(power_matrix(s, 0.0), DenseMatrix::identity(m)), 1e-10);
  const DenseMatrix b1 = power_matrix(s, 1.0);
  EXPECT_LT(max_abs_diff(multiply(b1, b1), b2) / max_abs(b2), 1e-8);

  // Independent route: Eigen eigensolver of the scaled tridiagonal matrix.
  for (double r : {-2.0, -0.5, 1.5}) {
    const Eigen::MatrixXd ref = hsreg::testing::scale_power(m, r);
    EXPECT_LT((to_eigen(power_matrix(s, r)) - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff(),
              1e-9)
        << "r=" << r;
  }

  std::mt19937_64 rng(8);
  const Vector x = random_vector(m, rng);
  const Vector a = multiply(power_matrix(s, -1.3), x);
  const Vector b = apply_power(s, -1.3, x);
  EXPECT_LT(norm2(subtract(a, b)) / norm2(b), 1e-9);
}
