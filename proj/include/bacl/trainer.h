#ifndef BACL_TRAINER_H_
#define BACL_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bacl/classifier.h"
#include "bacl/core.h"
#include "bacl/datagen.h"
#include "bacl/fhm.h"
#include "bacl/indicators.h"
#include "bacl/rng.h"

namespace bacl {

enum class TrainMode { kBaselineCe, kBceObjectness, kBacl };

std::string_view TrainModeName(TrainMode mode);
TrainMode ParseTrainMode(std::string_view name);

struct TrainConfig {
  HyperParams hp;
  int batch_size = 256;
  TrainMode mode = TrainMode::kBacl;
  // Stage-2 component toggles. Without the weight term every non-ground-truth
  // foreground class is weighted 1; without the margin every delta is 0.
  bool use_margin = true;
  bool use_weight_term = true;
  bool use_fhm = true;
  // Stage 2 starts from the stage-1 head unless this is set.
  bool reinit_head = false;
  int extractor_layers = 2;
  double head_init_scale = 0.01;
  // Raw-feature noise per dense proposal, in units of the task noise scale,
  // multiplied by the proposal's mean |eta|.
  double proposal_noise = 0.5;
  std::uint64_t seed = 0;
};

void ValidateTrainConfig(const TrainConfig& config);

struct EvalResult {
  std::vector<double> per_class;  // foreground classes; NaN if no test items
  double rare = 0.0;              // mean over classes in the group; NaN if empty
  double common = 0.0;
  double frequent = 0.0;
  double mean = 0.0;              // mean over all foreground classes
  double background = 0.0;        // fraction of background items rejected
};

// Foreground items count as correct when the combined objectness probability
// stays below kBackgroundThreshold and the largest foreground probability is
// the true class. Softmax models use the softmax background channel.
inline constexpr double kBackgroundThreshold = 0.5;

int Predict(const Model& model, const Eigen::VectorXd& x);
EvalResult Evaluate(const Model& model, std::span<const Example> items,
                    const std::vector<int>& train_counts);
// Group means computed from per-class accuracies.
void AggregateGroups(EvalResult& result, const std::vector<int>& train_counts);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double acc_overall = 0.0;
  double acc_rare = 0.0;
  double acc_common = 0.0;
  double acc_frequent = 0.0;
  double norm_cv = 0.0;
};

struct RunLog {
  std::string label;
  int num_classes = 0;
  std::vector<EpochRecord> epochs;
  std::vector<Eigen::VectorXd> weight_norms;  // per epoch
  std::optional<IndicatorSnapshot> indicators;
  EvalResult final_eval;
};

struct StageResult {
  Model model;
  RunLog log;
};

// Coefficient of variation (population std / mean); 0 for a zero mean.
double CoefficientOfVariation(const Eigen::VectorXd& v);

// End-to-end training of extractor and head: BCE with objectness for the
// sigmoid modes, softmax cross-entropy for kBaselineCe. Throws
// std::runtime_error with the step and batch class histogram on a
// non-finite loss.
StageResult TrainStage1(const Dataset& dataset, const TrainConfig& config);

struct StepStats {
  double loss = 0.0;
  int real_foreground = 0;
  int background = 0;
  int hallucinated = 0;
  std::vector<int> selected;
};

// Classifier-learning state: frozen extractor, trainable head, feature
// distributions and long-term indicators.
class ClassifierLearner {
 public:
  ClassifierLearner(Model model, const Dataset& dataset, const TrainConfig& config);

  void SetEpoch(int epoch);
  // One classifier-learning step over dataset.train[batch]: dense proposals
  // and distribution update, tail-biased hallucination, indicator update on
  // real and hallucinated foreground features, loss and a head-only SGD step.
  StepStats Step(std::span<const std::size_t> batch);

  const Model& model() const { return model_; }
  const FeatureDistribution& distribution() const { return dist_; }
  FeatureDistribution& mutable_distribution() { return dist_; }
  const LongTermIndicators& indicators() const { return indicators_; }
  const OptimizerState& optimizer() const { return opt_; }
  const Eigen::VectorXd& feature(std::size_t index) const { return features_[index]; }

 private:
  Model model_;
  const Dataset& dataset_;
  TrainConfig config_;
  std::vector<Eigen::VectorXd> features_;  // frozen-extractor features of train
  FeatureDistribution dist_;
  LongTermIndicators indicators_;
  OptimizerState opt_;
  Rng boxgen_;
  Rng select_;
  Rng noise_;
  std::int64_t steps_ = 0;
};

// Static indicators of a dataset: fraction of examples and raw counts.
LongTermIndicators MakeIndicators(const Dataset& dataset);

StageResult TrainStage2(const Model& stage1, const Dataset& dataset,
                        const TrainConfig& config);

// runlog.csv: epoch,loss,acc_overall,acc_rare,acc_common,acc_frequent,norm_cv
void WriteRunLogCsv(const RunLog& log, std::ostream& out);
std::vector<EpochRecord> ReadRunLogCsv(std::istream& in);

}  // namespace bacl

#endif  // BACL_TRAINER_H_
