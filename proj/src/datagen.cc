#include "bacl/datagen.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bacl {
namespace {

constexpr std::string_view kDatasetMagic = "bacl-dataset";
constexpr int kDatasetVersion = 1;

Box RandomBox(Rng& rng) {
  const double w = rng.Uniform(0.1, 0.5);
  const double h = rng.Uniform(0.1, 0.5);
  const double x1 = rng.Uniform(0.0, 1.0 - w);
  const double y1 = rng.Uniform(0.0, 1.0 - h);
  return Box{x1, y1, x1 + w, y1 + h};
}

Example DrawExample(const Dataset& ds, int label, Rng& rng) {
  Example ex;
  ex.label = label;
  ex.x.resize(ds.feature_dim());
  const double spread = ds.true_spreads(label);
  for (int k = 0; k < ds.feature_dim(); ++k) {
    ex.x(k) = ds.true_means(label, k) + spread * rng.Normal();
  }
  ex.box = RandomBox(rng);
  return ex;
}

void Expect(std::istream& in, std::string_view token) {
  std::string got;
  if (!(in >> got) || got != token) {
    throw std::runtime_error("dataset record: expected '" + std::string(token) +
                             "', got '" + got + "'");
  }
}

}  // namespace

double PowerForRange(int max_count, int min_count, int num_classes) {
  if (num_classes < 2) return 0.0;
  return std::log(static_cast<double>(max_count) / min_count) /
         std::log(static_cast<double>(num_classes));
}

void ValidateTaskSpec(const TaskSpec& s) {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("task spec: " + what);
  };
  if (s.num_classes < 3)
    fail("num_classes = " + std::to_string(s.num_classes) +
         " must be >= 3 so every frequency group can be populated");
  if (s.feature_dim < 1) fail("feature_dim must be >= 1");
  if (s.min_count < 1) fail("min_count must be >= 1");
  if (s.max_count < s.min_count) fail("max_count must be >= min_count");
  if (!(s.power >= 0.0) || !std::isfinite(s.power)) fail("power must be >= 0");
  if (s.background_count < 0) fail("background_count must be >= 0");
  if (!(s.class_sep >= 0.0)) fail("class_sep must be >= 0");
  if (!(s.noise_scale > 0.0)) fail("noise_scale must be > 0");
  if (!(s.background_scale > 0.0)) fail("background_scale must be > 0");
  if (s.test_per_class < 0) fail("test_per_class must be >= 0");
  if (s.test_background < 0) fail("test_background must be >= 0");
}

std::vector<int> PowerLawCounts(const TaskSpec& spec) {
  std::vector<int> counts(spec.num_classes);
  for (int i = 0; i < spec.num_classes; ++i) {
    const double raw = spec.max_count * std::pow(i + 1.0, -spec.power);
    const long rounded = std::lround(raw);
    counts[i] = static_cast<int>(
        std::clamp<long>(rounded, spec.min_count, spec.max_count));
  }
  return counts;
}

Dataset MakeTask(const TaskSpec& spec, std::uint64_t seed) {
  ValidateTaskSpec(spec);
  Dataset ds;
  ds.spec = spec;
  ds.counts = PowerLawCounts(spec);
  const int c = spec.num_classes;
  const int d = spec.feature_dim;

  Rng rng = MakeStream(seed, streams::kData);
  ds.true_means = Eigen::MatrixXd::Zero(c + 1, d);
  for (int i = 0; i < c; ++i) {
    for (int k = 0; k < d; ++k) ds.true_means(i, k) = spec.class_sep * rng.Normal();
  }
  ds.true_spreads = Eigen::VectorXd::Constant(c + 1, spec.noise_scale);
  ds.true_spreads(c) = spec.background_scale;

  for (int i = 0; i < c; ++i) {
    for (int n = 0; n < ds.counts[i]; ++n) ds.train.push_back(DrawExample(ds, i, rng));
  }
  for (int n = 0; n < spec.background_count; ++n)
    ds.train.push_back(DrawExample(ds, c, rng));
  for (int i = 0; i < c; ++i) {
    for (int n = 0; n < spec.test_per_class; ++n) ds.test.push_back(DrawExample(ds, i, rng));
  }
  for (int n = 0; n < spec.test_background; ++n) ds.test.push_back(DrawExample(ds, c, rng));
  return ds;
}

std::vector<std::size_t> SampleBatch(const Dataset& dataset, std::size_t batch_size,
                                     Rng& rng) {
  const std::size_t n = dataset.train.size();
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (batch_size > n) {
    throw std::invalid_argument("batch_size " + std::to_string(batch_size) +
                                " exceeds dataset size " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::size_t j = k + rng.Index(n - k);
    std::swap(idx[k], idx[j]);
  }
  idx.resize(batch_size);
  return idx;
}

std::vector<std::vector<std::size_t>> EpochBatches(std::size_t size,
                                                   std::size_t batch_size,
                                                   Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  std::vector<std::size_t> perm(size);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = 0; k + 1 < size; ++k) {
    std::swap(perm[k], perm[k + rng.Index(size - k)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < size; start += batch_size) {
    const std::size_t stop = std::min(size, start + batch_size);
    batches.emplace_back(perm.begin() + start, perm.begin() + stop);
  }
  return batches;
}

std::string_view GroupName(Group g) {
  switch (g) {
    case Group::kRare: return "rare";
    case Group::kCommon: return "common";
    case Group::kFrequent: return "frequent";
  }
  return "unknown";
}

Group GroupOf(int count) {
  if (count <= 10) return Group::kRare;
  if (count <= 100) return Group::kCommon;
  return Group::kFrequent;
}

std::vector<Group> GroupClasses(const std::vector<int>& counts) {
  std::vector<Group> groups;
  groups.reserve(counts.size());
  for (int n : counts) groups.push_back(GroupOf(n));
  return groups;
}

void WriteDataset(const Dataset& ds, std::ostream& out) {
  const TaskSpec& s = ds.spec;
  out << std::setprecision(17);
  out << kDatasetMagic << ' ' << kDatasetVersion << '\n';
  out << "spec " << s.num_classes << ' ' << s.feature_dim << ' ' << s.max_count << ' '
      << s.min_count << ' ' << s.power << ' ' << s.background_count << ' '
      << s.class_sep << ' ' << s.noise_scale << ' ' << s.background_scale << ' '
      << s.test_per_class << ' ' << s.test_background << '\n';
  out << "counts";
  for (int n : ds.counts) out << ' ' << n;
  out << '\n';
  for (int i = 0; i <= s.num_classes; ++i) {
    out << "generator " << i << ' ' << ds.true_spreads(i);
    for (int k = 0; k < s.feature_dim; ++k) out << ' ' << ds.true_means(i, k);
    out << '\n';
  }
  out << "examples " << ds.train.size() << ' ' << ds.test.size() << '\n';
  auto write = [&](std::string_view split, const Example& ex) {
    out << split << ' ' << ex.label << ' ' << ex.box.x1 << ' ' << ex.box.y1 << ' '
        << ex.box.x2 << ' ' << ex.box.y2;
    for (int k = 0; k < ex.x.size(); ++k) out << ' ' << ex.x(k);
    out << '\n';
  };
  for (const auto& ex : ds.train) write("train", ex);
  for (const auto& ex : ds.test) write("test", ex);
}

Dataset ReadDataset(std::istream& in) {
  Dataset ds;
  Expect(in, kDatasetMagic);
  int version = 0;
  in >> version;
  if (version != kDatasetVersion) {
    throw std::runtime_error("dataset record: unsupported version " +
                             std::to_string(version));
  }
  TaskSpec& s = ds.spec;
  Expect(in, "spec");
  in >> s.num_classes >> s.feature_dim >> s.max_count >> s.min_count >> s.power >>
      s.background_count >> s.class_sep >> s.noise_scale >> s.background_scale >>
      s.test_per_class >> s.test_background;
  if (!in) throw std::runtime_error("dataset record: malformed spec line");
  ValidateTaskSpec(s);
  Expect(in, "counts");
  ds.counts.resize(s.num_classes);
  for (int& n : ds.counts) in >> n;
  ds.true_means.resize(s.num_classes + 1, s.feature_dim);
  ds.true_spreads.resize(s.num_classes + 1);
  for (int i = 0; i <= s.num_classes; ++i) {
    Expect(in, "generator");
    int idx = -1;
    in >> idx >> ds.true_spreads(i);
    if (idx != i) throw std::runtime_error("dataset record: generator rows out of order");
    for (int k = 0; k < s.feature_dim; ++k) in >> ds.true_means(i, k);
  }
  Expect(in, "examples");
  std::size_t n_train = 0, n_test = 0;
  in >> n_train >> n_test;
  for (std::size_t n = 0; n < n_train + n_test; ++n) {
    std::string split;
    Example ex;
    in >> split >> ex.label >> ex.box.x1 >> ex.box.y1 >> ex.box.x2 >> ex.box.y2;
    ex.x.resize(s.feature_dim);
    for (int k = 0; k < s.feature_dim; ++k) in >> ex.x(k);
    if (!in) throw std::runtime_error("dataset record: truncated at example " + std::to_string(n));
    if (ex.label < 0 || ex.label > s.num_classes || !ex.box.valid()) {
      throw std::runtime_error("dataset record: invalid example " + std::to_string(n));
    }
    (split == "train" ? ds.train : ds.test).push_back(std::move(ex));
  }
  return ds;
}

void WriteGroups(const std::vector<int>& counts, std::ostream& out) {
  out << "class,count,group\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out << i << ',' << counts[i] << ',' << GroupName(GroupOf(counts[i])) << '\n';
  }
}

}  // namespace bacl
