#ifndef BACL_LOSSES_H_
#define BACL_LOSSES_H_

#include <Eigen/Dense>

namespace bacl {

// Loss value and its gradient with respect to the C+1 logits.
struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Indicator values entering the margin are floored here, and the margin
// itself is clipped to +-kMarginClip.
inline constexpr double kIndicatorFloor = 1e-12;
inline constexpr double kMarginClip = 20.0;

double Sigmoid(double z);
// log(1 + exp(x)) without overflow.
double Softplus(double x);

// Softmax cross-entropy over all C+1 channels; label in [0, C].
LossResult SoftmaxCe(const Eigen::VectorXd& z, int label);

// Per-channel sigmoid BCE. A foreground label i sets y_i = 1; the background
// label C sets only the objectness channel y_C = 1.
LossResult BceObjectness(const Eigen::VectorXd& z, int label);

// Combined probabilities: foreground channels gated by (1 - p_C), the last
// entry is p_C itself. The first C entries are the short-term indicators.
Eigen::VectorXd InferenceProbs(const Eigen::VectorXd& z);

// alpha * log(l_j / l_i) after flooring both indicators, clipped. Throws
// std::invalid_argument for negative or NaN indicator values.
double PairwiseMargin(double l_i, double l_j, double alpha);

// sigmoid(z_j + delta).
double AdjustedProb(double z_j, double delta);

// Binary mask over the C foreground classes for ground truth i: w_j = 1 when
// p_tilde_j >= p_tilde_i or p_tilde_j >= p_thresh. Entry i is 0. p_tilde may
// carry the trailing objectness entry; only the first C are read.
Eigen::VectorXd WeightTerms(const Eigen::VectorXd& p_tilde, int i, int num_classes,
                            double p_thresh);

// Foreground classification balance loss for a foreground sample of class i.
// `margins` and `weights` have length C; their entry i is ignored. Throws
// std::invalid_argument if i is not a foreground class.
LossResult Fcbl(const Eigen::VectorXd& z, int i, const Eigen::VectorXd& margins,
                const Eigen::VectorXd& weights);

}  // namespace bacl

#endif  // BACL_LOSSES_H_
