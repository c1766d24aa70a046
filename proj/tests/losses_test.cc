#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bacl/losses.h"
#include "oracles.h"

namespace bacl {
namespace {

using Eigen::VectorXd;

VectorXd RandomLogits(std::mt19937_64& gen, int channels, double scale = 4.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorXd z(channels);
  for (int k = 0; k < channels; ++k) z(k) = u(gen);
  return z;
}

TEST(Sigmoid, KnownValues) {
  EXPECT_EQ(Sigmoid(0.0), 0.5);
  EXPECT_NEAR(Sigmoid(40.0), 1.0, 1e-15);
  EXPECT_GT(Sigmoid(-700.0), 0.0);
  EXPECT_LE(Sigmoid(700.0), 1.0);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int k = 0; k < 1000; ++k) {
    const double z = u(gen);
    EXPECT_NEAR(Sigmoid(z) + Sigmoid(-z), 1.0, 1e-15);
  }
}

TEST(Softplus, StableAtExtremes) {
  EXPECT_NEAR(Softplus(0.0), std::log(2.0), 1e-16);
  EXPECT_DOUBLE_EQ(Softplus(800.0), 800.0);
  EXPECT_GE(Softplus(-800.0), 0.0);
  EXPECT_NEAR(Softplus(-40.0), std::exp(-40.0), 1e-30);
}

TEST(SoftmaxCe, UniformLogits) {
  const VectorXd z = VectorXd::Zero(4);
  for (int i = 0; i < 4; ++i) {
    const LossResult r = SoftmaxCe(z, i);
    EXPECT_NEAR(r.loss, std::log(4.0), 1e-15);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(r.grad(j), 0.25 - (i == j), 1e-15);
  }
}

TEST(SoftmaxCe, GradientSumsToZeroAndMatchesFiniteDifferences) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int channels = 2 + static_cast<int>(gen() % 9);
    const VectorXd z = RandomLogits(gen, channels);
    const int label = static_cast<int>(gen() % channels);
    const LossResult r = SoftmaxCe(z, label);
    EXPECT_NEAR(r.grad.sum(), 0.0, 1e-14);
    EXPECT_NEAR(r.loss, -std::log(testing::NaiveSoftmax(z)(label)), 1e-12);
    const VectorXd fd =
        testing::CentralDiff([&](const VectorXd& v) { return SoftmaxCe(v, label).loss; }, z);
    EXPECT_LE(testing::RelError(r.grad, fd), 1e-7) << "trial " << trial;
  }
}

TEST(BceObjectness, HandEvaluatedForeground) {
  const LossResult r = BceObjectness(VectorXd::Zero(3), 0);
  EXPECT_NEAR(r.loss, 3 * std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad(0), -0.5, 1e-15);
  EXPECT_NEAR(r.grad(1), 0.5, 1e-15);
  EXPECT_NEAR(r.grad(2), 0.5, 1e-15);
}

TEST(BceObjectness, HandEvaluatedBackground) {
  const LossResult r = BceObjectness(VectorXd::Zero(3), 2);
  EXPECT_NEAR(r.loss, 3 * std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad(0), 0.5, 1e-15);
  EXPECT_NEAR(r.grad(1), 0.5, 1e-15);
  EXPECT_NEAR(r.grad(2), -0.5, 1e-15);
}

TEST(BceObjectness, FiniteDifferences) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int channels = 3 + static_cast<int>(gen() % 8);
    const VectorXd z = RandomLogits(gen, channels);
    const int label = static_cast<int>(gen() % channels);
    const LossResult r = BceObjectness(z, label);
    const VectorXd fd = testing::CentralDiff(
        [&](const VectorXd& v) { return BceObjectness(v, label).loss; }, z);
    EXPECT_LE(testing::RelError(r.grad, fd), 1e-7) << "trial " << trial;
  }
}

TEST(InferenceProbs, ObjectnessGating) {
  VectorXd z(4);
  z << 0.3, -1.2, 2.0, -40.0;
  VectorXd p = InferenceProbs(z);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p(i), Sigmoid(z(i)), 1e-15);
  z(3) = 0.0;
  p = InferenceProbs(z);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p(i), 0.5 * Sigmoid(z(i)), 1e-16);
  EXPECT_DOUBLE_EQ(p(3), 0.5);
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXd r = RandomLogits(gen, 6);
    const VectorXd q = InferenceProbs(r);
    for (int i = 0; i < 5; ++i) {
      EXPECT_GT(q(i), 0.0);
      EXPECT_LT(q(i), 1.0);
      EXPECT_LE(q(i), Sigmoid(r(i)));
    }
  }
}

TEST(PairwiseMargin, Properties) {
  EXPECT_EQ(PairwiseMargin(0.3, 0.3, 0.85), 0.0);
  EXPECT_NEAR(PairwiseMargin(1.0, std::exp(1.0), 0.85), 0.85, 1e-15);
  EXPECT_NEAR(PairwiseMargin(100, 10, 0.85), 0.85 * std::log(0.1), 1e-15);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double a = u(gen), b = u(gen);
    EXPECT_EQ(PairwiseMargin(a, b, 0.7), -PairwiseMargin(b, a, 0.7));
  }
}

TEST(PairwiseMargin, FlooringAndClipping) {
  EXPECT_EQ(PairwiseMargin(0.0, 1.0, 1.0), kMarginClip);
  EXPECT_EQ(PairwiseMargin(1.0, 0.0, 1.0), -kMarginClip);
  EXPECT_EQ(PairwiseMargin(0.0, 0.0, 1.0), 0.0);
  EXPECT_THROW(PairwiseMargin(-0.1, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(PairwiseMargin(1.0, std::nan(""), 1.0), std::invalid_argument);
}

TEST(AdjustedProb, Properties) {
  EXPECT_EQ(AdjustedProb(1.3, 0.0), Sigmoid(1.3));
  EXPECT_GT(AdjustedProb(0.0, 30.0), 1.0 - 1e-12);
  double prev = 0.0;
  for (double d = -10.0; d <= 10.0; d += 0.25) {
    const double p = AdjustedProb(0.4, d);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

VectorXd Tilde(int channels, int i, double pi, int j, double pj) {
  VectorXd p = VectorXd::Constant(channels, 0.0);
  p(i) = pi;
  p(j) = pj;
  return p;
}

TEST(WeightTerms, ThreeBranches) {
  EXPECT_EQ(WeightTerms(Tilde(4, 0, 0.6, 1, 0.65), 0, 3, 0.7)(1), 1.0);
  EXPECT_EQ(WeightTerms(Tilde(4, 0, 0.9, 1, 0.75), 0, 3, 0.7)(1), 1.0);
  EXPECT_EQ(WeightTerms(Tilde(4, 0, 0.9, 1, 0.3), 0, 3, 0.7)(1), 0.0);
  // Equalities count as "greater or equal".
  EXPECT_EQ(WeightTerms(Tilde(4, 0, 0.5, 1, 0.5), 0, 3, 0.7)(1), 1.0);
  EXPECT_EQ(WeightTerms(Tilde(4, 0, 0.9, 1, 0.7), 0, 3, 0.7)(1), 1.0);
  const VectorXd w = WeightTerms(Tilde(4, 0, 0.9, 1, 0.1), 0, 3, 0.7);
  EXPECT_EQ(w.size(), 3);
  EXPECT_EQ(w(0), 0.0);
}

TEST(Fcbl, HandEvaluated) {
  const LossResult r = Fcbl(VectorXd::Zero(3), 0, VectorXd::Zero(2), VectorXd::Zero(2));
  EXPECT_NEAR(r.loss, 2 * std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad(0), -0.5, 1e-15);
  EXPECT_EQ(r.grad(1), 0.0);
  EXPECT_NEAR(r.grad(2), 0.5, 1e-15);
}

TEST(Fcbl, RejectsBackgroundLabel) {
  EXPECT_THROW(Fcbl(VectorXd::Zero(3), 2, VectorXd::Zero(2), VectorXd::Ones(2)),
               std::invalid_argument);
  EXPECT_THROW(Fcbl(VectorXd::Zero(3), -1, VectorXd::Zero(2), VectorXd::Ones(2)),
               std::invalid_argument);
}

TEST(Fcbl, UnitWeightsZeroMarginsEqualBce) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(gen() % 9);
    const VectorXd z = RandomLogits(gen, c + 1, 8.0);
    const int i = static_cast<int>(gen() % c);
    const LossResult a = Fcbl(z, i, VectorXd::Zero(c), VectorXd::Ones(c));
    const LossResult b = BceObjectness(z, i);
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    EXPECT_LE((a.grad - b.grad).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Fcbl, FiniteDifferencesAndZeroWeightMasking) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(gen() % 9);
    const VectorXd z = RandomLogits(gen, c + 1);
    const int i = static_cast<int>(gen() % c);
    VectorXd delta(c), w(c);
    for (int j = 0; j < c; ++j) {
      delta(j) = u(gen);
      w(j) = static_cast<double>(gen() % 2);
    }
    const LossResult r = Fcbl(z, i, delta, w);
    const VectorXd fd =
        testing::CentralDiff([&](const VectorXd& v) { return Fcbl(v, i, delta, w).loss; }, z);
    EXPECT_LE(testing::RelError(r.grad, fd), 1e-6) << "trial " << trial;
    for (int j = 0; j < c; ++j) {
      if (j != i && w(j) == 0.0) EXPECT_EQ(r.grad(j), 0.0);
    }
  }
}

TEST(Fcbl, SuppressionGrowsWithMargin) {
  VectorXd z(4);
  z << 0.5, -0.3, 0.1, -1.0;
  double prev = -1.0;
  for (double d = -5.0; d <= 5.0; d += 0.5) {
    VectorXd delta = VectorXd::Zero(3);
    delta(1) = d;
    const double g = Fcbl(z, 0, delta, VectorXd::Ones(3)).grad(1);
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Fcbl, BackgroundChannelIgnoresMarginsAndWeights) {
  VectorXd z(4);
  z << 0.5, -0.3, 0.1, 1.7;
  const double a = Fcbl(z, 1, VectorXd::Constant(3, 5.0), VectorXd::Zero(3)).grad(3);
  const double b = Fcbl(z, 1, VectorXd::Constant(3, -5.0), VectorXd::Ones(3)).grad(3);
  EXPECT_EQ(a, Sigmoid(1.7));
  EXPECT_EQ(b, Sigmoid(1.7));
}

}  // namespace
}  // namespace bacl
