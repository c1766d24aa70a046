#ifndef BACL_CLASSIFIER_H_
#define BACL_CLASSIFIER_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bacl/core.h"
#include "bacl/rng.h"

namespace bacl {

// One or two tanh(affine) layers mapping raw inputs to d-dimensional
// features. A frozen extractor is never modified by the optimizer.
struct FeatureExtractor {
  int layers = 2;
  Eigen::MatrixXd w1;  // d x input_dim
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // d x d, unused when layers == 1
  Eigen::VectorXd b2;
  bool frozen = false;

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int dim() const { return static_cast<int>(w1.rows()); }

  static FeatureExtractor Random(int input_dim, int dim, int layers, Rng& rng);
  // Identity weights and zero biases, so the output is tanh applied per layer.
  static FeatureExtractor Identity(int dim, int layers);

  struct Cache {
    Eigen::VectorXd x;
    Eigen::VectorXd h1;
    Eigen::VectorXd h;
  };
  struct Grads {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
  };

  // Throws std::invalid_argument on an input width mismatch.
  Eigen::VectorXd Extract(const Eigen::VectorXd& x) const;
  Eigen::VectorXd Forward(const Eigen::VectorXd& x, Cache& cache) const;
  // Accumulates dL/dparams into `grads` given dL/dh.
  void Backward(const Cache& cache, const Eigen::VectorXd& grad_h, Grads& grads) const;
  Grads ZeroGrads() const;
};

// Linear (C+1)-channel classification head z = W h + b.
struct ClassifierHead {
  Eigen::MatrixXd w;  // (C+1) x d
  Eigen::VectorXd b;

  int num_channels() const { return static_cast<int>(w.rows()); }
  int num_classes() const { return num_channels() - 1; }
  int dim() const { return static_cast<int>(w.cols()); }

  static ClassifierHead Random(int num_classes, int dim, double scale, Rng& rng);

  struct Grads {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
  };

  Eigen::VectorXd Forward(const Eigen::VectorXd& h) const;
  // Accumulates parameter gradients for one sample; returns dL/dh.
  Eigen::VectorXd Backward(const Eigen::VectorXd& h, const Eigen::VectorXd& grad_z,
                           Grads& grads) const;
  Grads ZeroGrads() const;
};

// L2 norms of the C foreground weight rows.
Eigen::VectorXd WeightNorms(const ClassifierHead& head);

// A named flat view of one parameter tensor and its gradient.
struct ParamSlot {
  std::string name;
  std::span<double> value;
  std::span<const double> grad;
  bool frozen = false;
};

struct OptimizerState {
  std::vector<std::vector<double>> velocity;
  double lr = 0.0;
  std::int64_t step = 0;
};

// v <- momentum * v + (g + weight_decay * p); p <- p - lr * v for every
// unfrozen slot, then step += 1. Throws std::invalid_argument naming the
// parameter on a non-finite gradient (before any update) or when slot shapes
// differ from the buffers of earlier steps.
void SgdStep(std::span<const ParamSlot> slots, OptimizerState& state, double momentum,
             double weight_decay);

std::vector<ParamSlot> HeadSlots(ClassifierHead& head, const ClassifierHead::Grads& g);
std::vector<ParamSlot> ExtractorSlots(FeatureExtractor& ext,
                                      const FeatureExtractor::Grads& g);

enum class OutputKind { kSigmoid, kSoftmax };

struct Model {
  FeatureExtractor extractor;
  ClassifierHead head;
  OutputKind output = OutputKind::kSigmoid;

  Eigen::VectorXd Logits(const Eigen::VectorXd& x) const {
    return head.Forward(extractor.Extract(x));
  }
};

// Versioned text checkpoint. Reals are stored as hexadecimal floating point
// so a save/load cycle is bit-exact.
void SaveCheckpoint(const Model& model, std::ostream& out);
Model LoadCheckpoint(std::istream& in);
void SaveCheckpointFile(const Model& model, const std::string& path);
Model LoadCheckpointFile(const std::string& path);

}  // namespace bacl

#endif  // BACL_CLASSIFIER_H_
