#ifndef BACL_INDICATORS_H_
#define BACL_INDICATORS_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bacl/core.h"

namespace bacl {

// Derived per-class statistics frozen at one training step. Holds copies, so
// later indicator updates never alter an existing snapshot.
struct IndicatorSnapshot {
  int num_classes = 0;
  std::vector<double> image_freq;
  std::vector<double> instance_freq;
  std::vector<double> cum_count;
  std::vector<double> mean_score;
  std::vector<double> tpr;  // 0 where tpr_has_data is false
  std::vector<bool> tpr_has_data;
  // C x C row-stochastic matrices; a row with no observations is uniform.
  Eigen::MatrixXd confusion_soft;
  Eigen::MatrixXd confusion_hard;
};

// Streaming long-term statistics over foreground samples. Single owner.
class LongTermIndicators {
 public:
  // image_freq and instance_freq are the static per-class statistics.
  LongTermIndicators(int num_classes, std::vector<double> image_freq,
                     std::vector<double> instance_freq);

  int num_classes() const { return num_classes_; }

  // s_i <- gamma * s_i + (1 - gamma) * mean of this step's p for class i.
  // Classes absent from the step are unchanged.
  void UpdateMeanScore(std::span<const double> gt_probs, std::span<const int> labels,
                       double gamma);
  // predicted[n] is the argmax over the foreground channels.
  void UpdateCountsTpr(std::span<const int> predicted, std::span<const int> labels);
  // Logit vectors of length C or C+1; the softmax runs over the first C.
  void UpdateConfusionSoft(std::span<const Eigen::VectorXd> logits,
                           std::span<const int> labels);
  void UpdateConfusionHard(std::span<const Eigen::VectorXd> logits,
                           std::span<const int> labels);

  IndicatorSnapshot Snapshot() const;

  const std::vector<std::int64_t>& counts() const { return counts_; }
  const std::vector<std::int64_t>& tpr_num() const { return tpr_num_; }
  const std::vector<std::int64_t>& tpr_den() const { return tpr_den_; }
  const std::vector<double>& mean_score() const { return mean_score_; }
  const Eigen::MatrixXd& soft_num() const { return soft_num_; }
  const Eigen::MatrixXd& hard_num() const { return hard_num_; }
  const std::vector<std::int64_t>& confusion_den() const { return soft_den_; }

 private:
  void CheckLabels(std::span<const int> labels) const;

  int num_classes_;
  std::vector<double> image_freq_;
  std::vector<double> instance_freq_;
  std::vector<std::int64_t> counts_;
  std::vector<double> mean_score_;
  std::vector<std::int64_t> tpr_num_;
  std::vector<std::int64_t> tpr_den_;
  Eigen::MatrixXd soft_num_;
  std::vector<std::int64_t> soft_den_;
  Eigen::MatrixXd hard_num_;
  std::vector<std::int64_t> hard_den_;
};

// Softmax over the first C entries of a logit vector.
Eigen::VectorXd ForegroundSoftmax(const Eigen::VectorXd& z, int num_classes);
// Argmax over the first C entries; ties resolve to the lowest index.
int ForegroundArgmax(const Eigen::VectorXd& z, int num_classes);

// (l_i, l_j) for the margin between ground truth i and class j. Scalar kinds
// return the statistic of each class; confusion kinds return (M_ji, M_ij).
std::pair<double, double> MarginInputs(const IndicatorSnapshot& snap, IndicatorKind kind,
                                       int i, int j);

// Margins delta_ij for every foreground j (entry i is 0).
Eigen::VectorXd MarginRow(const IndicatorSnapshot& snap, IndicatorKind kind, int i,
                          double alpha);

// The indicator in [0, 1] that drives the hallucination sampler. Unbounded
// kinds are divided by their maximum over classes; an all-zero vector maps
// to 0 for every class. Confusion kinds use the diagonal M_ii.
double FhmIndicator(const IndicatorSnapshot& snap, IndicatorKind kind, int i);
std::vector<double> FhmIndicators(const IndicatorSnapshot& snap, IndicatorKind kind);

// True when class i dominates class j under the kind's criterion.
bool Dominates(const IndicatorSnapshot& snap, IndicatorKind kind, int i, int j);

// Per-class CSV: class,image_freq,instance_freq,cum_count,mean_score,tpr,tpr_has_data,m_soft_diag,m_hard_diag
void WriteSnapshotCsv(const IndicatorSnapshot& snap, std::ostream& out);
// Full C x C matrix, one row per line, comma-separated.
void WriteMatrixCsv(const Eigen::MatrixXd& m, std::ostream& out);

}  // namespace bacl

#endif  // BACL_INDICATORS_H_
