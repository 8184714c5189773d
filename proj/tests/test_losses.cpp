#include <gtest/gtest.h>

#include <Eigen/Core>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "skp/losses.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using skp::InfoNceVariant;
using skp::NegativeSource;

oracle::Rows rows_of(const MatrixXd& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g;
  MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(gen);
  return m;
}

TEST(MlmLoss, Examples) {
  EXPECT_EQ(skp::mlm_loss(VectorXd::Constant(2, 1.0)), 0.0);
  EXPECT_NEAR(skp::mlm_loss(VectorXd::Constant(2, 0.5)), 2 * std::log(2.0), 1e-12);
  const double clamped = skp::mlm_loss(VectorXd::Zero(1));
  EXPECT_TRUE(std::isfinite(clamped));
  EXPECT_DOUBLE_EQ(clamped, -std::log(skp::kProbabilityFloor));
}

TEST(MlmLoss, DomainErrors) {
  EXPECT_THROW(skp::mlm_loss(VectorXd(0)), skp::ArgumentError);
  EXPECT_THROW(skp::mlm_loss(VectorXd::Constant(1, 1.5)), skp::ArgumentError);
  EXPECT_THROW(skp::mlm_loss(VectorXd::Constant(1, -0.1)), skp::ArgumentError);
}

TEST(MlmLoss, MonotoneNonIncreasingInEachEntry) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd p(4);
    for (auto& x : p) x = u(gen);
    VectorXd q = p;
    const auto k = static_cast<Eigen::Index>(gen() % 4);
    q(k) = p(k) + (1.0 - p(k)) * u(gen);
    EXPECT_LE(skp::mlm_loss(q), skp::mlm_loss(p));
  }
}

TEST(CosineSimilarity, Examples) {
  VectorXd u(3);
  u << 0.3, -1.2, 2.0;
  EXPECT_NEAR(skp::cosine_similarity(u, u), 1.0, 1e-15);
  EXPECT_NEAR(skp::cosine_similarity(u, VectorXd(-u)), -1.0, 1e-15);
  EXPECT_EQ(skp::cosine_similarity(VectorXd::Unit(2, 0), VectorXd::Unit(2, 1)), 0.0);
  EXPECT_THROW(skp::cosine_similarity(VectorXd::Zero(2), VectorXd::Unit(2, 0)), skp::ArgumentError);
  EXPECT_THROW(skp::cosine_similarity(VectorXd::Unit(2, 0), VectorXd::Unit(3, 0)), skp::ArgumentError);
}

TEST(InfoNce, EqualSimilaritiesGiveLogOfNegativeCount) {
  // Identical rows make every cosine 1.
  EXPECT_NEAR(skp::infonce_loss(MatrixXd::Ones(2, 4), MatrixXd::Ones(2, 4), 0.1), 0.0, 1e-12);
  EXPECT_NEAR(skp::infonce_loss(MatrixXd::Ones(3, 4), MatrixXd::Ones(3, 4), 0.1), std::log(2.0), 1e-12);
  EXPECT_NEAR(skp::infonce_loss(MatrixXd::Ones(3, 4), MatrixXd::Ones(3, 4), 0.1, InfoNceVariant::standard),
              std::log(3.0), 1e-12);
}

TEST(InfoNce, MatchesTwoLoopOracle) {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + gen() % 8);
    const auto d = static_cast<Eigen::Index>(1 + gen() % 16);
    const MatrixXd o = random_matrix(gen, n, d), p = random_matrix(gen, n, d);
    for (double tau : {0.05, 0.5, 2.0}) {
      for (auto v : {InfoNceVariant::paper, InfoNceVariant::standard}) {
        for (auto neg : {NegativeSource::positives, NegativeSource::originals}) {
          const double expected = oracle::infonce(rows_of(o), rows_of(p), tau, v == InfoNceVariant::standard,
                                                  neg == NegativeSource::originals);
          EXPECT_NEAR(skp::infonce_loss(o, p, tau, v, neg), expected, 1e-9 * std::max(1.0, std::abs(expected)));
        }
      }
    }
  }
}

TEST(InfoNce, StandardIsNonNegativeNegativesOnlyCanBeNegative) {
  std::mt19937_64 gen(33);
  bool saw_negative = false;
  for (int trial = 0; trial < 500; ++trial) {
    const MatrixXd o = random_matrix(gen, 4, 8);
    // Positives close to originals push the negatives-only form below zero.
    const MatrixXd p = o + 0.1 * random_matrix(gen, 4, 8);
    EXPECT_GE(skp::infonce_loss(o, p, 0.5, InfoNceVariant::standard), 0.0);
    saw_negative |= skp::infonce_loss(o, p, 0.5, InfoNceVariant::paper) < 0.0;
  }
  EXPECT_TRUE(saw_negative);
}

TEST(InfoNce, InvariantToPositiveRowScaling) {
  std::mt19937_64 gen(34);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXd o = random_matrix(gen, 5, 6), p = random_matrix(gen, 5, 6);
    MatrixXd o2 = o, p2 = p;
    for (Eigen::Index i = 0; i < 5; ++i) {
      o2.row(i) *= scale(gen);
      p2.row(i) *= scale(gen);
    }
    EXPECT_NEAR(skp::infonce_loss(o2, p2, 0.1), skp::infonce_loss(o, p, 0.1), 1e-9);
  }
}

TEST(InfoNce, LargeLogitsStayFinite) {
  std::mt19937_64 gen(35);
  const MatrixXd o = random_matrix(gen, 8, 4), p = random_matrix(gen, 8, 4);
  EXPECT_TRUE(std::isfinite(skp::infonce_loss(o, p, 1e-4)));
}

TEST(InfoNce, ArgumentErrors) {
  EXPECT_THROW(skp::infonce_loss(MatrixXd::Ones(1, 2), MatrixXd::Ones(1, 2), 0.1), skp::ArgumentError);
  EXPECT_THROW(skp::infonce_loss(MatrixXd::Ones(2, 2), MatrixXd::Ones(2, 2), 0.0), skp::ArgumentError);
  EXPECT_THROW(skp::infonce_loss(MatrixXd::Ones(2, 2), MatrixXd::Ones(3, 2), 0.1), skp::ArgumentError);
  EXPECT_THROW(skp::infonce_loss(MatrixXd::Zero(2, 2), MatrixXd::Ones(2, 2), 0.1), skp::ArgumentError);
}

TEST(JointLoss, WeightedSumAndEndpoints) {
  const auto r = skp::joint_loss(1.0, 2.0);
  EXPECT_EQ(r.alpha, 0.6);
  EXPECT_NEAR(r.l_joint, 1.4, 1e-15);
  EXPECT_EQ(skp::joint_loss(1.7, -3.1, 1.0).l_joint, 1.7);
  EXPECT_EQ(skp::joint_loss(1.7, -3.1, 0.0).l_joint, -3.1);
  EXPECT_THROW(skp::joint_loss(1.0, 1.0, 1.5), skp::ArgumentError);
  EXPECT_THROW(skp::joint_loss(1.0, 1.0, -0.5), skp::ArgumentError);
}

}  // namespace
