#ifndef BACL_FHM_H_
#define BACL_FHM_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bacl/core.h"
#include "bacl/indicators.h"
#include "bacl/rng.h"

namespace bacl {

inline constexpr int kDenseProposals = 16;

// [x1 + e0*w/6, y1 + e1*h/6, x2 + e2*w/6, y2 + e3*h/6].
Box ApplyOffsets(const Box& b, const std::array<double, 4>& eta);

struct Proposal {
  Box box;
  std::array<double, 4> eta;

  double MeanAbsOffset() const;
};

// Dense proposals around `b` with each offset drawn from U[-1, 1]. Degenerate
// draws are redrawn; throws std::runtime_error after 100 consecutive failures.
std::vector<Proposal> GenerateProposals(const Box& b, Rng& rng,
                                        int count = kDenseProposals);
std::vector<Box> GenerateBoxes(const Box& b, Rng& rng);

// Per-class EMA prototype (mean) and per-dimension standard deviation.
class FeatureDistribution {
 public:
  FeatureDistribution(int num_classes, int dim);

  // `features` holds one observation of class `label` per row. The first
  // observed batch of a class sets mu and sigma directly.
  void Update(int label, const Eigen::MatrixXd& features, double beta);

  int num_classes() const { return static_cast<int>(mu_.rows()); }
  int dim() const { return static_cast<int>(mu_.cols()); }
  bool eligible(int label) const { return seen_[label] > 0; }
  std::int64_t seen(int label) const { return seen_[label]; }
  Eigen::VectorXd mu(int label) const { return mu_.row(label).transpose(); }
  Eigen::VectorXd sigma(int label) const { return sigma_.row(label).transpose(); }

  void SetClass(int label, const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma);

 private:
  Eigen::MatrixXd mu_;
  Eigen::MatrixXd sigma_;
  std::vector<std::int64_t> seen_;
};

// sp_i = (1 - l_i) / sum_k (1 - l_k); uniform when the sum is zero.
std::vector<double> SamplingProbs(std::span<const double> indicator);
std::vector<double> SamplingProbs(const IndicatorSnapshot& snap, IndicatorKind kind);

// Weighted sampling of `count` distinct classes without replacement. Once
// the remaining probability mass is exhausted the rest are drawn uniformly.
std::vector<int> SelectClasses(std::span<const double> sp, int count, Rng& rng);

struct HallucinatedBatch {
  Eigen::MatrixXd features;  // one synthetic feature per row
  std::vector<int> labels;
};

// m samples mu_i + eps * sigma_i with eps ~ N(0, I). Throws
// std::invalid_argument if class i has never been observed.
HallucinatedBatch Synthesize(const FeatureDistribution& dist, int label, int m, Rng& rng);

// CSV: class,seen,mu_0..mu_{d-1},sigma_0..sigma_{d-1}
void WriteDistributionCsv(const FeatureDistribution& dist, std::ostream& out);

}  // namespace bacl

#endif  // BACL_FHM_H_
