#include "bacl/core.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bacl {
namespace {

struct KindName {
  IndicatorKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {IndicatorKind::kImageFreq, "image_freq"},
    {IndicatorKind::kInstanceFreq, "instance_freq"},
    {IndicatorKind::kCumCount, "cum_count"},
    {IndicatorKind::kMeanScore, "mean_score"},
    {IndicatorKind::kTpr, "tpr"},
    {IndicatorKind::kConfusionSoft, "confusion_soft"},
    {IndicatorKind::kConfusionHard, "confusion_hard"},
};

[[noreturn]] void Reject(std::string_view field, double value,
                         std::string_view range) {
  std::ostringstream msg;
  msg << "hyperparameter " << field << " = " << value << " outside legal range "
      << range;
  throw std::invalid_argument(msg.str());
}

}  // namespace

std::string_view IndicatorKindName(IndicatorKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

IndicatorKind ParseIndicatorKind(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (entry.name == name) return entry.kind;
  }
  throw std::invalid_argument("unknown indicator kind '" + std::string(name) +
                              "'");
}

double LrSchedule::RateAt(int epoch) const {
  const auto passed = std::count_if(decay_epochs.begin(), decay_epochs.end(),
                                    [epoch](int d) { return d < epoch; });
  return initial * std::pow(decay_factor, static_cast<double>(passed));
}

HyperParams ValidateParams(const HyperParams& raw) {
  // NaN fails every comparison below, so it is rejected as out of range.
  if (!(raw.gamma >= 0.0 && raw.gamma < 1.0)) Reject("gamma", raw.gamma, "[0, 1)");
  if (!(raw.alpha >= 0.0 && std::isfinite(raw.alpha)))
    Reject("alpha", raw.alpha, "[0, inf)");
  if (!(raw.p_thresh > 0.0 && raw.p_thresh <= 1.0))
    Reject("p_thresh", raw.p_thresh, "(0, 1]");
  if (!(raw.beta >= 0.0 && raw.beta < 1.0)) Reject("beta", raw.beta, "[0, 1)");
  if (raw.c_sampled < 0) Reject("c_sampled", raw.c_sampled, "[0, inf)");
  if (raw.m_per_class < 0) Reject("m_per_class", raw.m_per_class, "[0, inf)");
  if (!(raw.lr.initial > 0.0 && std::isfinite(raw.lr.initial)))
    Reject("lr.initial", raw.lr.initial, "(0, inf)");
  if (!(raw.lr.decay_factor > 0.0 && raw.lr.decay_factor <= 1.0))
    Reject("lr.decay_factor", raw.lr.decay_factor, "(0, 1]");
  for (int e : raw.lr.decay_epochs) {
    if (e < 1) Reject("lr.decay_epochs", e, "[1, inf)");
  }
  if (!(raw.momentum >= 0.0 && raw.momentum < 1.0))
    Reject("momentum", raw.momentum, "[0, 1)");
  if (!(raw.weight_decay >= 0.0 && std::isfinite(raw.weight_decay)))
    Reject("weight_decay", raw.weight_decay, "[0, inf)");
  if (raw.epochs_stage1 < 1) Reject("epochs_stage1", raw.epochs_stage1, "[1, inf)");
  if (raw.epochs_stage2 < 1) Reject("epochs_stage2", raw.epochs_stage2, "[1, inf)");
  return raw;
}

double IoU(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace bacl
