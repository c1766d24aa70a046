#include "bacl/trainer.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bacl/losses.h"

namespace bacl {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string BatchHistogram(const Dataset& ds, std::span<const std::size_t> batch) {
  std::map<int, int> hist;
  for (std::size_t idx : batch) ++hist[ds.train[idx].label];
  std::ostringstream s;
  bool first = true;
  for (const auto& [label, n] : hist) {
    s << (first ? "" : " ") << label << ':' << n;
    first = false;
  }
  return s.str();
}

[[noreturn]] void AbortNonFinite(std::string_view stage, std::int64_t step, const Dataset& ds,
                                 std::span<const std::size_t> batch) {
  throw std::runtime_error(std::string(stage) + ": non-finite loss at step " +
                           std::to_string(step) + "; batch class histogram {" +
                           BatchHistogram(ds, batch) + "}");
}

EpochRecord MakeRecord(int epoch, double loss, const EvalResult& eval,
                       const Eigen::VectorXd& norms) {
  EpochRecord r;
  r.epoch = epoch;
  r.loss = loss;
  r.acc_overall = eval.mean;
  r.acc_rare = eval.rare;
  r.acc_common = eval.common;
  r.acc_frequent = eval.frequent;
  r.norm_cv = CoefficientOfVariation(norms);
  return r;
}

void LogEpoch(RunLog& log, const Model& model, const Dataset& ds, int epoch,
              double loss) {
  const EvalResult eval = Evaluate(model, ds.test, ds.counts);
  const Eigen::VectorXd norms = WeightNorms(model.head);
  log.epochs.push_back(MakeRecord(epoch, loss, eval, norms));
  log.weight_norms.push_back(norms);
  log.final_eval = eval;
}

}  // namespace

std::string_view TrainModeName(TrainMode mode) {
  switch (mode) {
    case TrainMode::kBaselineCe: return "baseline_ce";
    case TrainMode::kBceObjectness: return "bce_objectness";
    case TrainMode::kBacl: return "bacl";
  }
  return "unknown";
}

TrainMode ParseTrainMode(std::string_view name) {
  for (TrainMode m : {TrainMode::kBaselineCe, TrainMode::kBceObjectness, TrainMode::kBacl}) {
    if (TrainModeName(m) == name) return m;
  }
  throw std::invalid_argument("unknown training mode '" + std::string(name) + "'");
}

void ValidateTrainConfig(const TrainConfig& config) {
  ValidateParams(config.hp);
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (config.extractor_layers != 1 && config.extractor_layers != 2)
    throw std::invalid_argument("extractor_layers must be 1 or 2");
  if (!(config.head_init_scale >= 0.0))
    throw std::invalid_argument("head_init_scale must be >= 0");
  if (!(config.proposal_noise >= 0.0))
    throw std::invalid_argument("proposal_noise must be >= 0");
}

double CoefficientOfVariation(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double mean = v.mean();
  if (mean == 0.0 || v.maxCoeff() == v.minCoeff()) return 0.0;
  const double var = (v.array() - mean).square().mean();
  return std::sqrt(var) / std::abs(mean);
}

int Predict(const Model& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd z = model.Logits(x);
  const int c = model.head.num_classes();
  double background = 0.0;
  if (model.output == OutputKind::kSigmoid) {
    background = Sigmoid(z(c));
  } else {
    const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    background = e(c) / e.sum();
  }
  if (background >= kBackgroundThreshold) return c;
  return ForegroundArgmax(z, c);
}

void AggregateGroups(EvalResult& r, const std::vector<int>& train_counts) {
  double sum[3] = {0, 0, 0};
  int n[3] = {0, 0, 0};
  double total = 0.0;
  int classes = 0;
  for (std::size_t i = 0; i < r.per_class.size(); ++i) {
    if (std::isnan(r.per_class[i])) continue;
    const int g = static_cast<int>(GroupOf(train_counts[i]));
    sum[g] += r.per_class[i];
    ++n[g];
    total += r.per_class[i];
    ++classes;
  }
  auto avg = [](double s, int k) { return k > 0 ? s / k : kNaN; };
  r.rare = avg(sum[static_cast<int>(Group::kRare)], n[static_cast<int>(Group::kRare)]);
  r.common = avg(sum[static_cast<int>(Group::kCommon)], n[static_cast<int>(Group::kCommon)]);
  r.frequent =
      avg(sum[static_cast<int>(Group::kFrequent)], n[static_cast<int>(Group::kFrequent)]);
  r.mean = avg(total, classes);
}

EvalResult Evaluate(const Model& model, std::span<const Example> items,
                    const std::vector<int>& train_counts) {
  const int c = model.head.num_classes();
  std::vector<int> correct(c, 0), seen(c, 0);
  int bg_correct = 0, bg_seen = 0;
  for (const auto& ex : items) {
    const int pred = Predict(model, ex.x);
    if (ex.label == c) {
      ++bg_seen;
      bg_correct += pred == c;
    } else {
      ++seen[ex.label];
      correct[ex.label] += pred == ex.label;
    }
  }
  EvalResult r;
  r.per_class.resize(c);
  for (int i = 0; i < c; ++i) {
    r.per_class[i] = seen[i] > 0 ? static_cast<double>(correct[i]) / seen[i] : kNaN;
  }
  r.background = bg_seen > 0 ? static_cast<double>(bg_correct) / bg_seen : kNaN;
  AggregateGroups(r, train_counts);
  return r;
}

StageResult TrainStage1(const Dataset& ds, const TrainConfig& config) {
  ValidateTrainConfig(config);
  const HyperParams& hp = config.hp;
  const bool softmax = config.mode == TrainMode::kBaselineCe;
  Rng init = MakeStream(config.seed, streams::kInit);
  Rng batches = MakeStream(config.seed, streams::kBatch);

  StageResult result;
  Model& model = result.model;
  model.output = softmax ? OutputKind::kSoftmax : OutputKind::kSigmoid;
  model.extractor = FeatureExtractor::Random(ds.feature_dim(), ds.feature_dim(),
                                             config.extractor_layers, init);
  model.head = ClassifierHead::Random(ds.num_classes(), ds.feature_dim(),
                                      config.head_init_scale, init);
  result.log.label = std::string(TrainModeName(config.mode)) + "/stage1";
  result.log.num_classes = ds.num_classes();

  OptimizerState opt;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= hp.epochs_stage1; ++epoch) {
    opt.lr = hp.lr.RateAt(epoch);
    double epoch_loss = 0.0;
    std::size_t epoch_samples = 0;
    for (const auto& batch : EpochBatches(ds.train.size(), config.batch_size, batches)) {
      auto eg = model.extractor.ZeroGrads();
      auto hg = model.head.ZeroGrads();
      double batch_loss = 0.0;
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const Example& ex = ds.train[idx];
        FeatureExtractor::Cache cache;
        const Eigen::VectorXd h = model.extractor.Forward(ex.x, cache);
        const Eigen::VectorXd z = model.head.Forward(h);
        LossResult lr = softmax ? SoftmaxCe(z, ex.label) : BceObjectness(z, ex.label);
        batch_loss += lr.loss;
        const Eigen::VectorXd grad_h = model.head.Backward(h, lr.grad * scale, hg);
        model.extractor.Backward(cache, grad_h, eg);
      }
      if (!std::isfinite(batch_loss)) AbortNonFinite("stage 1", step, ds, batch);
      auto slots = ExtractorSlots(model.extractor, eg);
      for (auto& s : HeadSlots(model.head, hg)) slots.push_back(s);
      SgdStep(slots, opt, hp.momentum, hp.weight_decay);
      ++step;
      epoch_loss += batch_loss;
      epoch_samples += batch.size();
    }
    LogEpoch(result.log, model, ds, epoch, epoch_loss / static_cast<double>(epoch_samples));
  }
  return result;
}

LongTermIndicators MakeIndicators(const Dataset& ds) {
  double total = 0.0;
  for (int n : ds.counts) total += n;
  std::vector<double> image_freq, instance_freq;
  for (int n : ds.counts) {
    image_freq.push_back(total > 0.0 ? n / total : 0.0);
    instance_freq.push_back(static_cast<double>(n));
  }
  return LongTermIndicators(ds.num_classes(), std::move(image_freq), std::move(instance_freq));
}

ClassifierLearner::ClassifierLearner(Model model, const Dataset& dataset,
                                     const TrainConfig& config)
    : model_(std::move(model)),
      dataset_(dataset),
      config_(config),
      dist_(dataset.num_classes(), dataset.feature_dim()),
      indicators_(MakeIndicators(dataset)),
      boxgen_(MakeStream(config.seed, streams::kBoxGen)),
      select_(MakeStream(config.seed, streams::kFhmSelect)),
      noise_(MakeStream(config.seed, streams::kFhmNoise)) {
  ValidateTrainConfig(config_);
  if (model_.head.num_classes() != dataset.num_classes() ||
      model_.extractor.input_dim() != dataset.feature_dim()) {
    throw std::invalid_argument("classifier learning: checkpoint shape does not match task");
  }
  model_.extractor.frozen = true;
  model_.output = OutputKind::kSigmoid;
  if (config_.reinit_head) {
    Rng init = MakeStream(config_.seed, "stage2/init");
    model_.head = ClassifierHead::Random(dataset.num_classes(), model_.extractor.dim(),
                                         config_.head_init_scale, init);
  }
  features_.reserve(dataset.train.size());
  for (const auto& ex : dataset.train) features_.push_back(model_.extractor.Extract(ex.x));
  SetEpoch(1);
}

void ClassifierLearner::SetEpoch(int epoch) { opt_.lr = config_.hp.lr.RateAt(epoch); }

StepStats ClassifierLearner::Step(std::span<const std::size_t> batch) {
  const HyperParams& hp = config_.hp;
  const int c = dataset_.num_classes();
  const int d = model_.extractor.dim();
  StepStats stats;

  std::vector<Eigen::VectorXd> fg_features;
  std::vector<int> fg_labels;
  std::vector<std::size_t> bg;
  for (std::size_t idx : batch) {
    const int label = dataset_.train[idx].label;
    if (label == c) {
      bg.push_back(idx);
    } else {
      fg_features.push_back(features_[idx]);
      fg_labels.push_back(label);
    }
  }
  stats.real_foreground = static_cast<int>(fg_features.size());
  stats.background = static_cast<int>(bg.size());

  if (config_.use_fhm && !fg_features.empty()) {
    // Dense proposals around each real instance feed the distributions only.
    std::map<int, std::vector<Eigen::VectorXd>> grouped;
    const double noise = config_.proposal_noise * dataset_.spec.noise_scale;
    for (std::size_t idx : batch) {
      const Example& ex = dataset_.train[idx];
      if (ex.label == c) continue;
      for (const auto& p : GenerateProposals(ex.box, boxgen_)) {
        Eigen::VectorXd x = ex.x;
        const double amp = noise * p.MeanAbsOffset();
        for (int k = 0; k < x.size(); ++k) x(k) += amp * boxgen_.Normal();
        grouped[ex.label].push_back(model_.extractor.Extract(x));
      }
    }
    for (const auto& [label, feats] : grouped) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(feats.size()), d);
      for (std::size_t r = 0; r < feats.size(); ++r) m.row(r) = feats[r].transpose();
      dist_.Update(label, m, hp.beta);
    }

    const auto sp = SamplingProbs(indicators_.Snapshot(), hp.indicator_kind);
    stats.selected = SelectClasses(sp, std::min(hp.c_sampled, c), select_);
    for (int label : stats.selected) {
      if (!dist_.eligible(label)) continue;
      const HallucinatedBatch hb = Synthesize(dist_, label, hp.m_per_class, noise_);
      for (Eigen::Index r = 0; r < hb.features.rows(); ++r) {
        fg_features.push_back(hb.features.row(r).transpose());
        fg_labels.push_back(label);
      }
      stats.hallucinated += static_cast<int>(hb.features.rows());
    }
  }

  std::vector<Eigen::VectorXd> fg_logits;
  fg_logits.reserve(fg_features.size());
  for (const auto& h : fg_features) fg_logits.push_back(model_.head.Forward(h));

  if (!fg_logits.empty()) {
    std::vector<double> gt_probs;
    std::vector<int> predicted;
    for (std::size_t n = 0; n < fg_logits.size(); ++n) {
      gt_probs.push_back(Sigmoid(fg_logits[n](fg_labels[n])));
      predicted.push_back(ForegroundArgmax(fg_logits[n], c));
    }
    indicators_.UpdateMeanScore(gt_probs, fg_labels, hp.gamma);
    indicators_.UpdateCountsTpr(predicted, fg_labels);
    indicators_.UpdateConfusionSoft(fg_logits, fg_labels);
    indicators_.UpdateConfusionHard(fg_logits, fg_labels);
  }

  const std::size_t total = fg_logits.size() + bg.size();
  if (total == 0) return stats;
  const double scale = 1.0 / static_cast<double>(total);
  auto hg = model_.head.ZeroGrads();
  double loss = 0.0;

  std::optional<IndicatorSnapshot> snap;
  if (config_.use_margin) snap = indicators_.Snapshot();
  std::map<int, Eigen::VectorXd> margin_cache;
  const Eigen::VectorXd no_margin = Eigen::VectorXd::Zero(c);
  for (std::size_t n = 0; n < fg_logits.size(); ++n) {
    const int i = fg_labels[n];
    const Eigen::VectorXd* margins = &no_margin;
    if (snap) {
      auto it = margin_cache.find(i);
      if (it == margin_cache.end()) {
        it = margin_cache.emplace(i, MarginRow(*snap, hp.indicator_kind, i, hp.alpha)).first;
      }
      margins = &it->second;
    }
    Eigen::VectorXd weights;
    if (config_.use_weight_term) {
      weights = WeightTerms(InferenceProbs(fg_logits[n]), i, c, hp.p_thresh);
    } else {
      weights = Eigen::VectorXd::Ones(c);
      weights(i) = 0.0;
    }
    const LossResult r = Fcbl(fg_logits[n], i, *margins, weights);
    loss += r.loss;
    model_.head.Backward(fg_features[n], r.grad * scale, hg);
  }
  for (std::size_t idx : bg) {
    const Eigen::VectorXd z = model_.head.Forward(features_[idx]);
    const LossResult r = BceObjectness(z, c);
    loss += r.loss;
    model_.head.Backward(features_[idx], r.grad * scale, hg);
  }
  if (!std::isfinite(loss)) AbortNonFinite("classifier learning", steps_, dataset_, batch);
  SgdStep(HeadSlots(model_.head, hg), opt_, hp.momentum, hp.weight_decay);
  ++steps_;
  stats.loss = loss * scale;
  return stats;
}

StageResult TrainStage2(const Model& stage1, const Dataset& ds, const TrainConfig& config) {
  ClassifierLearner learner(stage1, ds, config);
  Rng batches = MakeStream(config.seed, "stage2/batch");
  StageResult result;
  result.log.label = std::string(TrainModeName(config.mode)) + "/stage2";
  result.log.num_classes = ds.num_classes();
  for (int epoch = 1; epoch <= config.hp.epochs_stage2; ++epoch) {
    learner.SetEpoch(epoch);
    double epoch_loss = 0.0;
    std::size_t samples = 0;
    for (const auto& batch : EpochBatches(ds.train.size(), config.batch_size, batches)) {
      const StepStats s = learner.Step(batch);
      const std::size_t n =
          static_cast<std::size_t>(s.real_foreground + s.background + s.hallucinated);
      epoch_loss += s.loss * static_cast<double>(n);
      samples += n;
    }
    LogEpoch(result.log, learner.model(), ds, epoch,
             samples > 0 ? epoch_loss / static_cast<double>(samples) : 0.0);
  }
  result.log.indicators = learner.indicators().Snapshot();
  result.model = learner.model();
  return result;
}

void WriteRunLogCsv(const RunLog& log, std::ostream& out) {
  out << "epoch,loss,acc_overall,acc_rare,acc_common,acc_frequent,norm_cv\n";
  out << std::setprecision(10);
  for (const auto& r : log.epochs) {
    out << r.epoch << ',' << r.loss << ',' << r.acc_overall << ',' << r.acc_rare << ','
        << r.acc_common << ',' << r.acc_frequent << ',' << r.norm_cv << '\n';
  }
}

std::vector<EpochRecord> ReadRunLogCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "epoch,loss,acc_overall,acc_rare,acc_common,acc_frequent,norm_cv") {
    throw std::runtime_error("runlog: unexpected header '" + line + "'");
  }
  std::vector<EpochRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 7) throw std::runtime_error("runlog: malformed row '" + line + "'");
    EpochRecord r;
    r.epoch = static_cast<int>(v[0]);
    r.loss = v[1];
    r.acc_overall = v[2];
    r.acc_rare = v[3];
    r.acc_common = v[4];
    r.acc_frequent = v[5];
    r.norm_cv = v[6];
    records.push_back(r);
  }
  return records;
}

}  // namespace bacl
