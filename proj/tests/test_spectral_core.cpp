#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hsreg/linalg.hpp"
#include "oracles.hpp"

using namespace hsreg;
using hsreg::testing::random_matrix;
using hsreg::testing::random_vector;
using hsreg::testing::to_eigen;

namespace {

DenseMatrix random_spd(std::size_t n, std::mt19937_64& rng, double shift = 1e-3) {
  const DenseMatrix b = random_matrix(n, n, rng);
  DenseMatrix m = gram(b);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += shift;
  return m;
}

double rel_residual(const DenseMatrix& m, std::span<const double> x, std::span<const double> b) {
  return norm2(subtract(multiply(m, x), b)) / norm2(b);
}

}  // namespace

TEST(DenseMatrix, RejectsBadShapes) {
  EXPECT_THROW(DenseMatrix(0, 3), Error);
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW(DenseMatrix(1, 1, std::vector<double>{NAN}), Error);
  try {
    DenseMatrix(2, 2, std::vector<double>{1, 2, 3});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(DenseMatrix, ProductsMatchEigen) {
  std::mt19937_64 rng(7);
  const DenseMatrix a = random_matrix(6, 4, rng);
  const DenseMatrix b = random_matrix(4, 5, rng);
  const Vector x = random_vector(4, rng);
  const Vector y = random_vector(6, rng);
  EXPECT_LT((to_eigen(multiply(a, b)) - to_eigen(a) * to_eigen(b)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((to_eigen(multiply(a, x)) - to_eigen(a) * to_eigen(x)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((to_eigen(multiply_transposed(a, y)) - to_eigen(a).transpose() * to_eigen(y))
                .cwiseAbs()
                .maxCoeff(),
            1e-13);
  EXPECT_LT((to_eigen(gram(a)) - to_eigen(a).transpose() * to_eigen(a)).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_THROW(multiply(a, y), Error);
}

TEST(LaplacianEigen, SmallCases) {
  const SymEigen e1 = laplacian_eigen(1);
  ASSERT_EQ(e1.eigenvalues.size(), 1u);
  EXPECT_NEAR(e1.eigenvalues[0], 2.0, 1e-15);
  EXPECT_NEAR(std::abs(e1.eigenvectors(0, 0)), 1.0, 1e-15);

  const SymEigen e2 = laplacian_eigen(2);
  EXPECT_NEAR(e2.eigenvalues[0], 1.0, 1e-14);
  EXPECT_NEAR(e2.eigenvalues[1], 3.0, 1e-14);

  EXPECT_THROW(laplacian_eigen(0), Error);
}

TEST(LaplacianEigen, EigenpairResidualsAndOrthogonality) {
  for (std::size_t m : {3u, 17u, 100u, 500u}) {
    const SymEigen e = laplacian_eigen(m);
    for (std::size_t k = 1; k < m; ++k) EXPECT_LT(e.eigenvalues[k - 1], e.eigenvalues[k]);
    double worst_res = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const Vector v = e.eigenvectors.column(k);
      for (std::size_t j = 0; j < m; ++j) {
        double bv = 2.0 * v[j];
        if (j > 0) bv -= v[j - 1];
        if (j + 1 < m) bv -= v[j + 1];
        worst_res = std::max(worst_res, std::abs(bv - e.eigenvalues[k] * v[j]));
      }
    }
    EXPECT_LT(worst_res, 1e-12) << "m=" << m;
    const Eigen::MatrixXd v = to_eigen(e.eigenvectors);
    const double ortho = (v.transpose() * v - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
    EXPECT_LT(ortho, 1e-12) << "m=" << m;
  }
}

TEST(LaplacianEigen, MatchesIterativeSolver) {
  const std::size_t m = 40;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    t(i, i) = 2.0;
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = -1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const SymEigen e = laplacian_eigen(m);
  for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(e.eigenvalues[k], es.eigenvalues()(k), 1e-12);
}

TEST(SpdFactor, TrivialCases) {
  const auto f = spd_factor(DenseMatrix::identity(3));
  EXPECT_LT(max_abs_diff(f.lower, DenseMatrix::identity(3)), 1e-15);
  const auto g = spd_factor(DenseMatrix(1, 1, std::vector<double>{4.0}));
  EXPECT_DOUBLE_EQ(g.lower(0, 0), 2.0);

  const Vector r{1.5, -2.0, 3.25};
  const Vector x = spd_solve(f, r);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x[i], r[i]);

  const auto d = spd_factor(DenseMatrix::diagonal(std::vector<double>{2.0, 4.0}));
  const Vector y = spd_solve(d, std::vector<double>{2.0, 4.0});
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0, 1e-15);
  EXPECT_THROW(spd_solve(d, std::vector<double>{1.0}), Error);
}

TEST(SpdFactor, NotSpdCarriesPivot) {
  DenseMatrix m = DenseMatrix::identity(3);
  m(2, 2) = -1.0;
  try {
    spd_factor(m);
    FAIL() << "expected NotSpdError";
  } catch (const NotSpdError& e) {
    EXPECT_EQ(e.pivot(), 2u);
    EXPECT_EQ(e.code(), ErrorCode::NotSpd);
  }
  DenseMatrix asym = DenseMatrix::identity(2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(spd_factor(asym), Error);
}

TEST(SpdFactor, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {5u, 20u, 50u}) {
    const DenseMatrix m = random_spd(n, rng);
    const auto f = spd_factor(m);
    const Vector b = random_vector(n, rng);
    EXPECT_LT(rel_residual(m, spd_solve(f, b), b), 1e-10) << "n=" << n;
    // L L^T reconstructs M.
    const DenseMatrix llt = multiply(f.lower, transpose(f.lower));
    EXPECT_LT(max_abs_diff(llt, m) / max_abs(m), 1e-12);
  }
}

TEST(SpdFactor, IllConditionedRoundTrip) {
  // Condition number 1e8 through a prescribed spectrum.
  std::mt19937_64 rng(5);
  const std::size_t n = 30;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(to_eigen(random_matrix(n, n, rng)));
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (std::size_t i = 0; i < n; ++i) d(i) = std::pow(10.0, -8.0 * i / (n - 1.0));
  const Eigen::MatrixXd me = q * d.asDiagonal() * q.transpose();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (me(i, j) + me(j, i));
  const Vector b = random_vector(n, rng);
  const Vector x = spd_solve(spd_factor(m), b);
  // Normwise backward error; ||r||/||b|| itself is bounded below by about
  // eps * cond once x is rounded to double.
  const double backward =
      norm2(subtract(multiply(m, x), b)) / (to_eigen(m).norm() * norm2(x) + norm2(b));
  EXPECT_LT(backward, 1e-10);
}

TEST(Svd, TrivialCases) {
  const Svd d = svd(DenseMatrix::diagonal(std::vector<double>{1.0, 3.0}));
  EXPECT_NEAR(d.singular_values[0], 3.0, 1e-14);
  EXPECT_NEAR(d.singular_values[1], 1.0, 1e-14);

  const Svd z = svd(DenseMatrix(3, 3, 0.0));
  for (double s : z.singular_values) EXPECT_EQ(s, 0.0);
  const Eigen::MatrixXd u = to_eigen(z.u);
  EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Svd, RandomAgainstEigenvalues) {
  std::mt19937_64 rng(3);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{10, 10}, {12, 7}, {6, 9}}) {
    const DenseMatrix a = random_matrix(r, c, rng);
    const Svd d = svd(a);
    const Eigen::MatrixXd ae = to_eigen(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ae.transpose() * ae);
    const std::size_t k = std::min(r, c);
    ASSERT_EQ(d.singular_values.size(), k);
    for (std::size_t i = 0; i < k; ++i) {
      const double ref = std::sqrt(std::max(0.0, es.eigenvalues()(c - 1 - i)));
      EXPECT_NEAR(d.singular_values[i], ref, 1e-8 * ref) << r << "x" << c << " i=" << i;
      if (i) {
        EXPECT_GE(d.singular_values[i - 1], d.singular_values[i]);
      }
    }
    const Eigen::MatrixXd u = to_eigen(d.u);
    const Eigen::MatrixXd v = to_eigen(d.v);
    const Eigen::VectorXd s = to_eigen(d.singular_values);
    const Eigen::MatrixXd rec = u * s.asDiagonal() * v.transpose();
    EXPECT_LT((rec - ae).norm() / ae.norm(), 1e-8);
    EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Svd, RankDeficient) {
  std::mt19937_64 rng(9);
  const DenseMatrix b = random_matrix(8, 3, rng);
  const DenseMatrix a = multiply(b, transpose(b));  // rank 3
  const Svd d = svd(a);
  for (std::size_t i = 3; i < 8; ++i) EXPECT_LT(d.singular_values[i], 1e-10 * d.singular_values[0]);
  const Eigen::MatrixXd u = to_eigen(d.u);
  EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
}
