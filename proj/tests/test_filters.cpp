#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hsreg/filters.hpp"
#include "hsreg/iteration.hpp"
#include "oracles.hpp"

using namespace hsreg;
using hsreg::testing::from_eigen;
using hsreg::testing::random_vector;
using hsreg::testing::to_eigen;

namespace {

/// x0 + G^s V diag(g(s_i^2) s_i) U^T (y - A x0) from Eigen's SVD, with the
/// filter evaluated by the naive product formula in long double.
Vector eigen_closed_form(const DenseMatrix& a, std::size_t m, double s,
                         const std::vector<double>& alphas, const Vector& y, const Vector& x0) {
  const Eigen::MatrixXd gs = hsreg::testing::scale_power(m, -s);
  const Eigen::MatrixXd t = to_eigen(a) * gs;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd res = to_eigen(y) - to_eigen(a) * to_eigen(x0);
  Eigen::VectorXd c = svd.matrixU().transpose() * res;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const long double sv = svd.singularValues()(i);
    const long double lam = sv * sv;
    long double r = 1.0L;
    for (double al : alphas) r *= al / (lam + al);
    long double g = 0.0L;
    for (double al : alphas) g += 1.0L / al;  // limit lambda -> 0
    if (lam > 0.0L) g = (1.0L - r) / lam;
    c(i) = static_cast<double>(static_cast<long double>(c(i)) * g * sv);
  }
  return from_eigen(to_eigen(x0) + gs * (svd.matrixV() * c));
}

}  // namespace

TEST(Filters, ScalarExamples) {
  const AlphaSequence one({1.0});
  EXPECT_DOUBLE_EQ(eval_g(one, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(eval_r(one, 1.0), 0.5);
  const AlphaSequence two({1.0, 1.0});
  EXPECT_DOUBLE_EQ(eval_g(two, 1.0), 0.75);
  EXPECT_DOUBLE_EQ(1.0 * eval_r(two, 1.0), 0.25);
  EXPECT_LE(1.0 * eval_r(two, 1.0), 1.0 / two.sigma());
  EXPECT_EQ(eval_r(two, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(two.sigma(), 2.0);

  const AlphaSequence seq({0.3, 2.0, 7.5});
  const double lam = 1e-12 * 0.3;
  EXPECT_NEAR(eval_g(seq, lam), seq.sigma(), 1e-6 * seq.sigma());

  EXPECT_THROW(eval_g(one, 0.0), Error);
  EXPECT_THROW(eval_g(one, -1.0), Error);
  EXPECT_THROW(eval_r(one, -1.0), Error);
  AlphaSequence bad;
  EXPECT_THROW(bad.push_back(0.0), Error);
  EXPECT_THROW(bad.push_back(-1.0), Error);
}

TEST(Filters, StableForTinyLambda) {
  // Reference: series 1 - r = sum_k (-1)^{k+1} e_k(lambda) with long double
  // product; at lambda sigma << 1 this is lambda sigma to first order.
  const AlphaSequence seq({1e-2, 3e-1, 4.0});
  for (double lam : {1e-16, 1e-14 * 1e-2, 1e-12}) {
    long double r = 1.0L;
    for (double a : seq.alphas()) r *= 1.0L / (1.0L + lam / static_cast<long double>(a));
    long double g_series = 0.0L;
    // g = sigma - lambda * sum_{i<=j} 1/(a_i a_j) + O(lambda^2)
    long double second = 0.0L;
    const auto& al = seq.alphas();
    for (std::size_t i = 0; i < al.size(); ++i)
      for (std::size_t j = i; j < al.size(); ++j) second += 1.0L / (al[i] * static_cast<long double>(al[j]));
    g_series = seq.sigma() - lam * second;
    EXPECT_NEAR(eval_g(seq, lam), static_cast<double>(g_series), 1e-10 * seq.sigma()) << lam;
  }
}

TEST(Filters, IdentityAndProperties) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> expo(std::log(1e-8), std::log(1e3));
  std::uniform_int_distribution<int> len(1, 20);
  std::vector<double> grid;
  for (int i = 0; i < 120; ++i) grid.push_back(std::pow(10.0, -10.0 + 12.0 * i / 119.0));
  for (int trial = 0; trial < 300; ++trial) {
    AlphaSequence seq;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) seq.push_back(std::exp(expo(rng)));
    for (double l : grid) {
      EXPECT_NEAR(l * eval_g(seq, l) + eval_r(seq, l), 1.0, 1e-13);
    }
    const auto rep = check_properties(seq, grid);
    EXPECT_LE(rep.max_violation(), 1e-12) << "trial " << trial << " worst lambda " << rep.worst_lambda;
  }
  EXPECT_THROW(check_properties(AlphaSequence({1.0}), std::vector<double>{}), Error);
  EXPECT_THROW(check_properties(AlphaSequence({1.0}), std::vector<double>{0.0}), Error);
}

TEST(Filters, ResidualMonotoneAndLimits) {
  AlphaSequence seq({2.0, 0.5});
  const double before = eval_r(seq, 0.1);
  seq.push_back(0.25);
  EXPECT_LT(eval_r(seq, 0.1), before);
  const AlphaSequence big(std::vector<double>(8, 1e-14));
  const AlphaSequence small(std::vector<double>(8, 1e14));
  EXPECT_LT(eval_r(big, 1e-2), 1e-12);
  EXPECT_NEAR(eval_r(small, 1e-2), 1.0, 1e-12);
}

TEST(Oracle, TrivialCases) {
  const TestProblem p = make_problem(Variant::Quartic, 20);
  const ScaleOperator s(20);
  std::mt19937_64 rng(3);
  const Vector x0 = random_vector(20, rng);
  const Vector same = oracle_solution(p.A, s, 1.0, AlphaSequence{}, p.y, x0);
  EXPECT_EQ(same, x0);
  const Vector ax0 = multiply(p.A, x0);
  const Vector fixed = oracle_solution(p.A, s, 1.0, AlphaSequence({1e-3, 1e-4}), ax0, x0);
  EXPECT_LT(norm2(subtract(fixed, x0)), 1e-12 * norm2(x0));
}

TEST(Oracle, MatchesEigenClosedFormAndIteration) {
  std::mt19937_64 rng(13);
  for (double s : {0.0, 0.5, 1.0, 2.0}) {
    for (std::size_t m : {8u, 20u, 35u}) {
      const TestProblem p = make_problem(Variant::Sine, m);
      const ScaleOperator scale(m);
      const RegularizationContext ctx(p.A, scale, s);
      const NoisyData nd = add_noise(p.y, 0.02, 40 + m);
      const Vector x0 = random_vector(m, rng, 0.05);
      // alpha around ||T||^2 = ||A||^2 mu_1^{-2s}.
      const double mu1 = scale.mu()[0];
      const double tn = std::pow(1.0 / (M_PI * M_PI), 2) / std::pow(mu1, 2.0 * s);
      const std::vector<double> alphas{tn * 3.0, tn * 0.2, tn * 0.01};
      const AlphaSequence seq(alphas);
      const Vector ref = eigen_closed_form(p.A, m, s, alphas, nd.y_delta, x0);
      const Vector orc = oracle_solution(p.A, scale, s, seq, nd.y_delta, x0);
      const Vector itr = iterate_sequence(ctx, seq, nd.y_delta, x0);
      EXPECT_LT(norm2(subtract(orc, ref)) / norm2(ref), 1e-8) << "s=" << s << " m=" << m;
      EXPECT_LT(norm2(subtract(itr, ref)) / norm2(ref), 1e-8) << "s=" << s << " m=" << m;
      EXPECT_NEAR(oracle_discrepancy(p.A, scale, s, seq, nd.y_delta, x0),
                  discrepancy(p.A, itr, nd.y_delta), 1e-8 * norm2(nd.y_delta));
    }
  }
}
