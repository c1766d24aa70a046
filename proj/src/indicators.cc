#include "bacl/indicators.h"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bacl/losses.h"

namespace bacl {
namespace {

Eigen::MatrixXd DeriveRows(const Eigen::MatrixXd& num,
                           const std::vector<std::int64_t>& den) {
  const auto c = num.rows();
  Eigen::MatrixXd m(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    if (den[i] > 0) {
      m.row(i) = num.row(i) / static_cast<double>(den[i]);
    } else {
      m.row(i).setConstant(1.0 / static_cast<double>(c));
    }
  }
  return m;
}

const std::vector<double>& ScalarValues(const IndicatorSnapshot& snap,
                                        IndicatorKind kind) {
  switch (kind) {
    case IndicatorKind::kImageFreq: return snap.image_freq;
    case IndicatorKind::kInstanceFreq: return snap.instance_freq;
    case IndicatorKind::kCumCount: return snap.cum_count;
    case IndicatorKind::kMeanScore: return snap.mean_score;
    case IndicatorKind::kTpr: return snap.tpr;
    default: break;
  }
  throw std::invalid_argument("indicator kind '" + std::string(IndicatorKindName(kind)) +
                              "' has no scalar statistic");
}

bool IsConfusion(IndicatorKind kind) {
  return kind == IndicatorKind::kConfusionSoft || kind == IndicatorKind::kConfusionHard;
}

const Eigen::MatrixXd& Confusion(const IndicatorSnapshot& snap, IndicatorKind kind) {
  return kind == IndicatorKind::kConfusionSoft ? snap.confusion_soft : snap.confusion_hard;
}

void CheckPair(const IndicatorSnapshot& snap, int i, int j) {
  if (i < 0 || i >= snap.num_classes || j < 0 || j >= snap.num_classes || i == j) {
    throw std::invalid_argument("margin inputs need distinct foreground classes, got (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
  }
}

}  // namespace

LongTermIndicators::LongTermIndicators(int num_classes, std::vector<double> image_freq,
                                       std::vector<double> instance_freq)
    : num_classes_(num_classes),
      image_freq_(std::move(image_freq)),
      instance_freq_(std::move(instance_freq)) {
  if (num_classes_ < 1) throw std::invalid_argument("indicators: num_classes must be >= 1");
  if (static_cast<int>(image_freq_.size()) != num_classes_ ||
      static_cast<int>(instance_freq_.size()) != num_classes_) {
    throw std::invalid_argument("indicators: static statistics must have length " +
                                std::to_string(num_classes_));
  }
  for (int i = 0; i < num_classes_; ++i) {
    if (!(image_freq_[i] >= 0.0) || !(instance_freq_[i] >= 0.0)) {
      throw std::invalid_argument("indicators: static statistics must be non-negative");
    }
  }
  const auto c = static_cast<std::size_t>(num_classes_);
  counts_.assign(c, 0);
  mean_score_.assign(c, 1.0 / (num_classes_ + 1.0));
  tpr_num_.assign(c, 0);
  tpr_den_.assign(c, 0);
  soft_num_ = Eigen::MatrixXd::Zero(num_classes_, num_classes_);
  soft_den_.assign(c, 0);
  hard_num_ = Eigen::MatrixXd::Zero(num_classes_, num_classes_);
  hard_den_.assign(c, 0);
}

void LongTermIndicators::CheckLabels(std::span<const int> labels) const {
  for (int y : labels) {
    if (y < 0 || y >= num_classes_) {
      throw std::invalid_argument("indicators: label " + std::to_string(y) +
                                  " is not a foreground class");
    }
  }
}

void LongTermIndicators::UpdateMeanScore(std::span<const double> gt_probs,
                                         std::span<const int> labels, double gamma) {
  if (gt_probs.size() != labels.size())
    throw std::invalid_argument("indicators: probs/labels length mismatch");
  CheckLabels(labels);
  std::vector<double> sum(num_classes_, 0.0);
  std::vector<int> n(num_classes_, 0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    sum[labels[k]] += gt_probs[k];
    ++n[labels[k]];
  }
  for (int i = 0; i < num_classes_; ++i) {
    if (n[i] == 0) continue;
    mean_score_[i] = gamma * mean_score_[i] + (1.0 - gamma) * (sum[i] / n[i]);
  }
}

void LongTermIndicators::UpdateCountsTpr(std::span<const int> predicted,
                                         std::span<const int> labels) {
  if (predicted.size() != labels.size())
    throw std::invalid_argument("indicators: predicted/labels length mismatch");
  CheckLabels(labels);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int y = labels[k];
    ++counts_[y];
    ++tpr_den_[y];
    if (predicted[k] == y) ++tpr_num_[y];
  }
}

void LongTermIndicators::UpdateConfusionSoft(std::span<const Eigen::VectorXd> logits,
                                             std::span<const int> labels) {
  if (logits.size() != labels.size())
    throw std::invalid_argument("indicators: logits/labels length mismatch");
  CheckLabels(labels);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    soft_num_.row(labels[k]) += ForegroundSoftmax(logits[k], num_classes_).transpose();
    ++soft_den_[labels[k]];
  }
}

void LongTermIndicators::UpdateConfusionHard(std::span<const Eigen::VectorXd> logits,
                                             std::span<const int> labels) {
  if (logits.size() != labels.size())
    throw std::invalid_argument("indicators: logits/labels length mismatch");
  CheckLabels(labels);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    hard_num_(labels[k], ForegroundArgmax(logits[k], num_classes_)) += 1.0;
    ++hard_den_[labels[k]];
  }
}

IndicatorSnapshot LongTermIndicators::Snapshot() const {
  IndicatorSnapshot s;
  s.num_classes = num_classes_;
  s.image_freq = image_freq_;
  s.instance_freq = instance_freq_;
  s.cum_count.assign(counts_.begin(), counts_.end());
  s.mean_score = mean_score_;
  s.tpr.assign(num_classes_, 0.0);
  s.tpr_has_data.assign(num_classes_, false);
  for (int i = 0; i < num_classes_; ++i) {
    if (tpr_den_[i] > 0) {
      s.tpr[i] = static_cast<double>(tpr_num_[i]) / static_cast<double>(tpr_den_[i]);
      s.tpr_has_data[i] = true;
    }
  }
  s.confusion_soft = DeriveRows(soft_num_, soft_den_);
  s.confusion_hard = DeriveRows(hard_num_, hard_den_);
  return s;
}

Eigen::VectorXd ForegroundSoftmax(const Eigen::VectorXd& z, int num_classes) {
  const auto head = z.head(num_classes);
  const Eigen::VectorXd e = (head.array() - head.maxCoeff()).exp();
  return e / e.sum();
}

int ForegroundArgmax(const Eigen::VectorXd& z, int num_classes) {
  Eigen::Index best = 0;
  z.head(num_classes).maxCoeff(&best);
  return static_cast<int>(best);
}

std::pair<double, double> MarginInputs(const IndicatorSnapshot& snap, IndicatorKind kind,
                                       int i, int j) {
  CheckPair(snap, i, j);
  if (IsConfusion(kind)) {
    const auto& m = Confusion(snap, kind);
    return {m(j, i), m(i, j)};
  }
  const auto& v = ScalarValues(snap, kind);
  return {v[i], v[j]};
}

Eigen::VectorXd MarginRow(const IndicatorSnapshot& snap, IndicatorKind kind, int i,
                          double alpha) {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(snap.num_classes);
  for (int j = 0; j < snap.num_classes; ++j) {
    if (j == i) continue;
    const auto [li, lj] = MarginInputs(snap, kind, i, j);
    delta(j) = PairwiseMargin(li, lj, alpha);
  }
  return delta;
}

std::vector<double> FhmIndicators(const IndicatorSnapshot& snap, IndicatorKind kind) {
  const int c = snap.num_classes;
  std::vector<double> l(c);
  if (IsConfusion(kind)) {
    const auto& m = Confusion(snap, kind);
    for (int i = 0; i < c; ++i) l[i] = m(i, i);
    return l;
  }
  l = ScalarValues(snap, kind);
  const bool unbounded = kind == IndicatorKind::kImageFreq ||
                         kind == IndicatorKind::kInstanceFreq ||
                         kind == IndicatorKind::kCumCount;
  if (unbounded) {
    const double top = *std::max_element(l.begin(), l.end());
    for (double& v : l) v = top > 0.0 ? v / top : 0.0;
  }
  for (double& v : l) v = std::clamp(v, 0.0, 1.0);
  return l;
}

double FhmIndicator(const IndicatorSnapshot& snap, IndicatorKind kind, int i) {
  if (i < 0 || i >= snap.num_classes)
    throw std::invalid_argument("fhm indicator: class out of range");
  return FhmIndicators(snap, kind)[i];
}

bool Dominates(const IndicatorSnapshot& snap, IndicatorKind kind, int i, int j) {
  CheckPair(snap, i, j);
  if (IsConfusion(kind)) {
    const auto& m = Confusion(snap, kind);
    return m(j, i) > m(i, j);
  }
  const auto& v = ScalarValues(snap, kind);
  return v[i] > v[j];
}

void WriteSnapshotCsv(const IndicatorSnapshot& s, std::ostream& out) {
  out << std::setprecision(17);
  out << "class,image_freq,instance_freq,cum_count,mean_score,tpr,tpr_has_data,"
         "m_soft_diag,m_hard_diag\n";
  for (int i = 0; i < s.num_classes; ++i) {
    out << i << ',' << s.image_freq[i] << ',' << s.instance_freq[i] << ','
        << s.cum_count[i] << ',' << s.mean_score[i] << ',' << s.tpr[i] << ','
        << (s.tpr_has_data[i] ? 1 : 0) << ',' << s.confusion_soft(i, i) << ','
        << s.confusion_hard(i, i) << '\n';
  }
}

void WriteMatrixCsv(const Eigen::MatrixXd& m, std::ostream& out) {
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

}  // namespace bacl
