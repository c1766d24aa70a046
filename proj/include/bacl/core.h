#ifndef BACL_CORE_H_
#define BACL_CORE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bacl {

// Class indices are zero-based throughout the library: foreground classes
// occupy [0, C) and the background/objectness channel is index C.

// Long-term indicator used by the margin and by the hallucination sampler.
enum class IndicatorKind {
  kImageFreq,
  kInstanceFreq,
  kCumCount,
  kMeanScore,
  kTpr,
  kConfusionSoft,
  kConfusionHard,
};

inline constexpr IndicatorKind kAllIndicatorKinds[] = {
    IndicatorKind::kImageFreq,  IndicatorKind::kInstanceFreq,
    IndicatorKind::kCumCount,   IndicatorKind::kMeanScore,
    IndicatorKind::kTpr,        IndicatorKind::kConfusionSoft,
    IndicatorKind::kConfusionHard,
};

std::string_view IndicatorKindName(IndicatorKind kind);
// Throws std::invalid_argument for unknown names.
IndicatorKind ParseIndicatorKind(std::string_view name);

struct LrSchedule {
  double initial = 0.02;
  double decay_factor = 0.1;
  // One-based epochs after which the rate is multiplied by decay_factor.
  std::vector<int> decay_epochs = {8, 11};

  // Learning rate in effect during one-based `epoch`.
  double RateAt(int epoch) const;
};

struct HyperParams {
  double gamma = 0.9;
  double alpha = 0.85;
  double p_thresh = 0.7;
  double beta = 0.9;
  int c_sampled = 8;
  int m_per_class = 12;
  LrSchedule lr;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs_stage1 = 12;
  int epochs_stage2 = 12;
  IndicatorKind indicator_kind = IndicatorKind::kConfusionSoft;
};

// Returns `raw` unchanged if every field is in range. Otherwise throws
// std::invalid_argument naming the first offending field, its value and the
// legal range.
HyperParams ValidateParams(const HyperParams& raw);

// Axis-aligned box with x2 > x1 and y2 > y1.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 1.0;
  double y2 = 1.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x2 > x1 && y2 > y1; }
};

double IoU(const Box& a, const Box& b);

}  // namespace bacl

#endif  // BACL_CORE_H_
