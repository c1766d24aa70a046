#include "bacl/fhm.h"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bacl {

Box ApplyOffsets(const Box& b, const std::array<double, 4>& eta) {
  const double w = b.width();
  const double h = b.height();
  return Box{b.x1 + eta[0] * w / 6.0, b.y1 + eta[1] * h / 6.0,
             b.x2 + eta[2] * w / 6.0, b.y2 + eta[3] * h / 6.0};
}

double Proposal::MeanAbsOffset() const {
  return (std::abs(eta[0]) + std::abs(eta[1]) + std::abs(eta[2]) + std::abs(eta[3])) / 4.0;
}

std::vector<Proposal> GenerateProposals(const Box& b, Rng& rng, int count) {
  if (!b.valid()) throw std::invalid_argument("generate_boxes: source box is degenerate");
  std::vector<Proposal> out;
  out.reserve(count);
  int failures = 0;
  while (static_cast<int>(out.size()) < count) {
    Proposal p;
    for (double& e : p.eta) e = rng.Uniform(-1.0, 1.0);
    p.box = ApplyOffsets(b, p.eta);
    if (!p.box.valid()) {
      if (++failures > 100) {
        throw std::runtime_error("generate_boxes: 100 consecutive degenerate proposals");
      }
      continue;
    }
    failures = 0;
    out.push_back(p);
  }
  return out;
}

std::vector<Box> GenerateBoxes(const Box& b, Rng& rng) {
  std::vector<Box> boxes;
  for (const auto& p : GenerateProposals(b, rng)) boxes.push_back(p.box);
  return boxes;
}

FeatureDistribution::FeatureDistribution(int num_classes, int dim)
    : mu_(Eigen::MatrixXd::Zero(num_classes, dim)),
      sigma_(Eigen::MatrixXd::Zero(num_classes, dim)),
      seen_(num_classes, 0) {}

void FeatureDistribution::Update(int label, const Eigen::MatrixXd& features, double beta) {
  if (label < 0 || label >= num_classes())
    throw std::invalid_argument("feature distribution: label out of range");
  if (features.rows() == 0) return;
  if (features.cols() != dim())
    throw std::invalid_argument("feature distribution: feature width mismatch");
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Eigen::RowVectorXd spread =
      ((features.rowwise() - mean).array().square().colwise().mean()).sqrt();
  if (seen_[label] == 0) {
    mu_.row(label) = mean;
    sigma_.row(label) = spread;
  } else {
    mu_.row(label) = beta * mu_.row(label) + (1.0 - beta) * mean;
    sigma_.row(label) = beta * sigma_.row(label) + (1.0 - beta) * spread;
  }
  seen_[label] += features.rows();
}

void FeatureDistribution::SetClass(int label, const Eigen::VectorXd& mu,
                                   const Eigen::VectorXd& sigma) {
  if ((sigma.array() < 0.0).any())
    throw std::invalid_argument("feature distribution: sigma must be non-negative");
  mu_.row(label) = mu.transpose();
  sigma_.row(label) = sigma.transpose();
  if (seen_[label] == 0) seen_[label] = 1;
}

std::vector<double> SamplingProbs(std::span<const double> indicator) {
  std::vector<double> sp(indicator.size());
  double total = 0.0;
  for (double l : indicator) total += 1.0 - l;
  if (!(total > 0.0)) {
    std::fill(sp.begin(), sp.end(), 1.0 / static_cast<double>(sp.size()));
    return sp;
  }
  for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = (1.0 - indicator[i]) / total;
  return sp;
}

std::vector<double> SamplingProbs(const IndicatorSnapshot& snap, IndicatorKind kind) {
  const auto l = FhmIndicators(snap, kind);
  return SamplingProbs(l);
}

std::vector<int> SelectClasses(std::span<const double> sp, int count, Rng& rng) {
  const int c = static_cast<int>(sp.size());
  if (count > c) {
    throw std::invalid_argument("select_classes: cannot pick " + std::to_string(count) +
                                " of " + std::to_string(c) + " classes");
  }
  std::vector<double> weight(sp.begin(), sp.end());
  std::vector<bool> taken(c, false);
  std::vector<int> chosen;
  chosen.reserve(count);
  for (int k = 0; k < count; ++k) {
    double mass = 0.0;
    for (int i = 0; i < c; ++i) {
      if (!taken[i]) mass += weight[i];
    }
    int pick = -1;
    if (mass > 0.0) {
      double u = rng.Uniform(0.0, mass);
      for (int i = 0; i < c; ++i) {
        if (taken[i] || weight[i] <= 0.0) continue;
        pick = i;
        u -= weight[i];
        if (u < 0.0) break;
      }
    } else {
      std::vector<int> rest;
      for (int i = 0; i < c; ++i) {
        if (!taken[i]) rest.push_back(i);
      }
      pick = rest[rng.Index(rest.size())];
    }
    taken[pick] = true;
    chosen.push_back(pick);
  }
  return chosen;
}

HallucinatedBatch Synthesize(const FeatureDistribution& dist, int label, int m, Rng& rng) {
  if (label < 0 || label >= dist.num_classes() || !dist.eligible(label)) {
    throw std::invalid_argument("synthesize: class " + std::to_string(label) +
                                " has no observed feature distribution");
  }
  const Eigen::VectorXd mu = dist.mu(label);
  const Eigen::VectorXd sigma = dist.sigma(label);
  HallucinatedBatch batch;
  batch.features.resize(m, dist.dim());
  batch.labels.assign(m, label);
  for (int n = 0; n < m; ++n) {
    for (int k = 0; k < dist.dim(); ++k) {
      batch.features(n, k) = mu(k) + rng.Normal() * sigma(k);
    }
  }
  return batch;
}

void WriteDistributionCsv(const FeatureDistribution& dist, std::ostream& out) {
  out << std::setprecision(17) << "class,seen";
  for (int k = 0; k < dist.dim(); ++k) out << ",mu_" << k;
  for (int k = 0; k < dist.dim(); ++k) out << ",sigma_" << k;
  out << '\n';
  for (int i = 0; i < dist.num_classes(); ++i) {
    out << i << ',' << dist.seen(i);
    const Eigen::VectorXd mu = dist.mu(i);
    const Eigen::VectorXd sigma = dist.sigma(i);
    for (int k = 0; k < dist.dim(); ++k) out << ',' << mu(k);
    for (int k = 0; k < dist.dim(); ++k) out << ',' << sigma(k);
    out << '\n';
  }
}

}  // namespace bacl
