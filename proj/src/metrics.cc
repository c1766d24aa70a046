#include "bacl/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace bacl {
namespace {

constexpr const char* kMetricNames[] = {"loss",         "acc_overall",  "acc_rare",
                                        "acc_common",   "acc_frequent", "norm_cv"};

std::array<double, 6> Values(const EpochRecord& r) {
  return {r.loss, r.acc_overall, r.acc_rare, r.acc_common, r.acc_frequent, r.norm_cv};
}

nlohmann::json Real(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

BalanceReport MakeBalanceReport(const Eigen::VectorXd& norms, const EvalResult& eval,
                                const std::vector<int>& train_counts) {
  if (static_cast<std::size_t>(norms.size()) != train_counts.size()) {
    throw std::invalid_argument("balance report: norm and count vectors differ in length");
  }
  BalanceReport r;
  r.class_order.resize(train_counts.size());
  std::iota(r.class_order.begin(), r.class_order.end(), 0);
  std::stable_sort(r.class_order.begin(), r.class_order.end(),
                   [&](int a, int b) { return train_counts[a] > train_counts[b]; });
  for (int i : r.class_order) {
    r.counts_sorted.push_back(train_counts[i]);
    r.norms_sorted.push_back(norms(i));
  }
  r.norm_cv = CoefficientOfVariation(norms);
  r.acc_rare = eval.rare;
  r.acc_common = eval.common;
  r.acc_frequent = eval.frequent;
  r.acc_overall = eval.mean;
  r.head_tail_gap = eval.frequent - eval.rare;
  return r;
}

BalanceReport MakeBalanceReport(const Model& model, const Dataset& dataset) {
  return MakeBalanceReport(WeightNorms(model.head), Evaluate(model, dataset.test, dataset.counts),
                           dataset.counts);
}

void WriteNormCurveCsv(const BalanceReport& report, std::ostream& out) {
  out << std::setprecision(10) << "rank,class,count,norm\n";
  for (std::size_t k = 0; k < report.class_order.size(); ++k) {
    out << k + 1 << ',' << report.class_order[k] << ',' << report.counts_sorted[k] << ','
        << report.norms_sorted[k] << '\n';
  }
}

void WriteBalanceJson(const BalanceReport& r, std::ostream& out) {
  nlohmann::json j;
  j["norm_cv"] = Real(r.norm_cv);
  j["acc_overall"] = Real(r.acc_overall);
  j["acc_rare"] = Real(r.acc_rare);
  j["acc_common"] = Real(r.acc_common);
  j["acc_frequent"] = Real(r.acc_frequent);
  j["head_tail_gap"] = Real(r.head_tail_gap);
  j["class_order"] = r.class_order;
  j["counts_sorted"] = r.counts_sorted;
  j["norms_sorted"] = r.norms_sorted;
  out << j.dump(2) << '\n';
}

ComparisonTable CompareRuns(std::span<const RunLog> logs) {
  if (logs.empty()) throw std::invalid_argument("compare_runs: no run logs given");
  ComparisonTable t;
  int max_epoch = 0;
  for (const auto& log : logs) {
    if (log.num_classes != logs.front().num_classes) {
      throw std::invalid_argument("compare_runs: run '" + log.label + "' has " +
                                  std::to_string(log.num_classes) + " classes, run '" +
                                  logs.front().label + "' has " +
                                  std::to_string(logs.front().num_classes));
    }
    if (log.epochs.empty()) {
      throw std::invalid_argument("compare_runs: run '" + log.label + "' has no epochs");
    }
    t.labels.push_back(log.label);
    t.finals.push_back(log.epochs.back());
    for (const auto& r : log.epochs) max_epoch = std::max(max_epoch, r.epoch);
  }
  for (int e = 1; e <= max_epoch; ++e) {
    std::vector<std::optional<EpochRecord>> row(logs.size());
    for (std::size_t k = 0; k < logs.size(); ++k) {
      for (const auto& r : logs[k].epochs) {
        if (r.epoch == e) row[k] = r;
      }
    }
    t.epochs.push_back(e);
    t.cells.push_back(std::move(row));
  }
  return t;
}

void WriteComparisonCsv(const ComparisonTable& t, std::ostream& out) {
  out << std::setprecision(10) << "epoch";
  for (const auto& label : t.labels) {
    for (const char* m : kMetricNames) out << ',' << label << '.' << m;
  }
  out << '\n';
  for (std::size_t e = 0; e < t.epochs.size(); ++e) {
    out << t.epochs[e];
    for (const auto& cell : t.cells[e]) {
      if (cell) {
        for (double v : Values(*cell)) out << ',' << v;
      } else {
        for (std::size_t k = 0; k < std::size(kMetricNames); ++k) out << ',';
      }
    }
    out << '\n';
  }
}

void WriteFinalTableCsv(const ComparisonTable& t, std::ostream& out) {
  out << std::setprecision(10)
      << "run,acc_overall,acc_rare,acc_common,acc_frequent,norm_cv,"
         "delta_overall,delta_rare,delta_common,delta_frequent\n";
  const EpochRecord& ref = t.finals.front();
  for (std::size_t k = 0; k < t.labels.size(); ++k) {
    const EpochRecord& r = t.finals[k];
    out << t.labels[k] << ',' << r.acc_overall << ',' << r.acc_rare << ',' << r.acc_common
        << ',' << r.acc_frequent << ',' << r.norm_cv << ',' << r.acc_overall - ref.acc_overall
        << ',' << r.acc_rare - ref.acc_rare << ',' << r.acc_common - ref.acc_common << ','
        << r.acc_frequent - ref.acc_frequent << '\n';
  }
}

}  // namespace bacl
