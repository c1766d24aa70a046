#ifndef BACL_DATAGEN_H_
#define BACL_DATAGEN_H_

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bacl/core.h"
#include "bacl/rng.h"

namespace bacl {

// Synthetic long-tailed classification task. Class i (one-based rank r = i+1)
// receives round(max_count * r^-power) training examples clamped to
// [min_count, max_count]. Each class draws an isotropic Gaussian prototype
// scaled by class_sep; examples add isotropic noise of scale noise_scale.
// Background is one extra class centred at the origin whose spread is
// background_scale, broad enough to overlap every foreground class.
struct TaskSpec {
  int num_classes = 30;
  int feature_dim = 32;
  int max_count = 5000;
  int min_count = 5;
  double power = 2.0309;
  int background_count = 4000;
  double class_sep = 1.0;
  double noise_scale = 1.0;
  double background_scale = 2.0;
  // Held-out evaluation split, balanced across foreground classes.
  int test_per_class = 100;
  int test_background = 1000;
};

// Exponent that makes the count curve run exactly from max_count (rank 1) to
// min_count (rank num_classes).
double PowerForRange(int max_count, int min_count, int num_classes);

// Throws std::invalid_argument naming the first violated constraint.
void ValidateTaskSpec(const TaskSpec& spec);

// Per-class training counts from the power law, head to tail.
std::vector<int> PowerLawCounts(const TaskSpec& spec);

struct Example {
  int label = 0;  // [0, C) foreground, C background
  Eigen::VectorXd x;
  Box box;
};

struct Dataset {
  TaskSpec spec;
  // (C+1) x d generator means; row C is the background.
  Eigen::MatrixXd true_means;
  // Per-class isotropic generator spread, length C+1.
  Eigen::VectorXd true_spreads;
  std::vector<int> counts;  // training counts per foreground class
  std::vector<Example> train;
  std::vector<Example> test;

  int num_classes() const { return spec.num_classes; }
  int background() const { return spec.num_classes; }
  int feature_dim() const { return spec.feature_dim; }
};

Dataset MakeTask(const TaskSpec& spec, std::uint64_t seed);

// Uniform sampling without replacement and without class rebalancing.
// Returns indices into dataset.train.
std::vector<std::size_t> SampleBatch(const Dataset& dataset,
                                     std::size_t batch_size, Rng& rng);

// One epoch: a random permutation of the training set cut into batches.
std::vector<std::vector<std::size_t>> EpochBatches(std::size_t size,
                                                   std::size_t batch_size,
                                                   Rng& rng);

enum class Group { kRare, kCommon, kFrequent };

std::string_view GroupName(Group g);

// rare: n <= 10, common: 11..100, frequent: n > 100.
Group GroupOf(int count);
std::vector<Group> GroupClasses(const std::vector<int>& counts);

// Plain-text dataset record: a header, then one example per line as
//   <split> <label> <x1> <y1> <x2> <y2> <f_1> ... <f_d>
// with split in {train, test} and reals printed round-trip exact.
void WriteDataset(const Dataset& dataset, std::ostream& out);
Dataset ReadDataset(std::istream& in);

// CSV with header class,count,group.
void WriteGroups(const std::vector<int>& counts, std::ostream& out);

}  // namespace bacl

#endif  // BACL_DATAGEN_H_
