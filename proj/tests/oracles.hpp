#pragma once

// Independent references used only by the tests.

#include <Eigen/Dense>

#include <random>

#include "hsreg/linalg.hpp"

namespace hsreg::testing {

inline Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector from_eigen(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (double& v : a.row(i)) v = n(rng);
  return a;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

/// B^r of the scale operator built from Eigen's eigendecomposition of the
/// scaled second-difference matrix.
inline Eigen::MatrixXd scale_power(std::size_t m, double r) {
  const double scale = static_cast<double>((m + 1) * (m + 1)) / (M_PI * M_PI);
  Eigen::MatrixXd b2 = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    b2(i, i) = 2.0 * scale;
    if (i + 1 < m) b2(i, i + 1) = b2(i + 1, i) = -scale;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b2);
  const Eigen::VectorXd d = es.eigenvalues().array().pow(r / 2.0);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace hsreg::testing
