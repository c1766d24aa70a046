#include "bacl/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bacl {

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

LossResult SoftmaxCe(const Eigen::VectorXd& z, int label) {
  if (label < 0 || label >= z.size()) {
    throw std::invalid_argument("softmax_ce: label " + std::to_string(label) +
                                " out of range");
  }
  const double zmax = z.maxCoeff();
  const Eigen::VectorXd e = (z.array() - zmax).exp();
  const double sum = e.sum();
  LossResult r;
  r.loss = std::log(sum) + zmax - z(label);
  r.grad = e / sum;
  r.grad(label) -= 1.0;
  return r;
}

LossResult BceObjectness(const Eigen::VectorXd& z, int label) {
  const int channels = static_cast<int>(z.size());
  if (label < 0 || label >= channels) {
    throw std::invalid_argument("bce_objectness: label " + std::to_string(label) +
                                " out of range");
  }
  LossResult r;
  r.grad.resize(channels);
  for (int k = 0; k < channels; ++k) {
    const bool positive = (k == label);
    // -log p = softplus(-z), -log(1-p) = softplus(z)
    r.loss += positive ? Softplus(-z(k)) : Softplus(z(k));
    r.grad(k) = Sigmoid(z(k)) - (positive ? 1.0 : 0.0);
  }
  return r;
}

Eigen::VectorXd InferenceProbs(const Eigen::VectorXd& z) {
  const Eigen::Index c = z.size() - 1;
  Eigen::VectorXd p(z.size());
  const double objectness = Sigmoid(z(c));
  for (Eigen::Index k = 0; k < c; ++k) p(k) = (1.0 - objectness) * Sigmoid(z(k));
  p(c) = objectness;
  return p;
}

double PairwiseMargin(double l_i, double l_j, double alpha) {
  if (!(l_i >= 0.0) || !(l_j >= 0.0)) {
    throw std::invalid_argument("pairwise_margin: indicator values must be >= 0, got (" +
                                std::to_string(l_i) + ", " + std::to_string(l_j) + ")");
  }
  const double li = std::max(l_i, kIndicatorFloor);
  const double lj = std::max(l_j, kIndicatorFloor);
  // Difference of logs keeps the margin exactly antisymmetric under a swap.
  return std::clamp(alpha * (std::log(lj) - std::log(li)), -kMarginClip, kMarginClip);
}

double AdjustedProb(double z_j, double delta) { return Sigmoid(z_j + delta); }

Eigen::VectorXd WeightTerms(const Eigen::VectorXd& p_tilde, int i, int num_classes,
                            double p_thresh) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(num_classes);
  for (int j = 0; j < num_classes; ++j) {
    if (j == i) continue;
    if (p_tilde(j) >= p_tilde(i) || p_tilde(j) >= p_thresh) w(j) = 1.0;
  }
  return w;
}

LossResult Fcbl(const Eigen::VectorXd& z, int i, const Eigen::VectorXd& margins,
                const Eigen::VectorXd& weights) {
  const int c = static_cast<int>(z.size()) - 1;
  if (i < 0 || i >= c) {
    throw std::invalid_argument("fcbl: label " + std::to_string(i) +
                                " is not a foreground class");
  }
  LossResult r;
  r.grad = Eigen::VectorXd::Zero(c + 1);
  r.loss = Softplus(-z(i)) + Softplus(z(c));
  r.grad(i) = Sigmoid(z(i)) - 1.0;
  r.grad(c) = Sigmoid(z(c));
  for (int j = 0; j < c; ++j) {
    if (j == i || weights(j) == 0.0) continue;
    const double shifted = z(j) + margins(j);
    r.loss += weights(j) * Softplus(shifted);
    r.grad(j) = weights(j) * Sigmoid(shifted);
  }
  return r;
}

}  // namespace bacl
