#ifndef BACL_METRICS_H_
#define BACL_METRICS_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bacl/classifier.h"
#include "bacl/datagen.h"
#include "bacl/trainer.h"

namespace bacl {

struct BalanceReport {
  // Classes ordered by descending training count (stable on ties).
  std::vector<int> class_order;
  std::vector<int> counts_sorted;
  std::vector<double> norms_sorted;
  double norm_cv = 0.0;
  double acc_rare = 0.0;
  double acc_common = 0.0;
  double acc_frequent = 0.0;
  double acc_overall = 0.0;
  // acc_frequent - acc_rare
  double head_tail_gap = 0.0;
};

BalanceReport MakeBalanceReport(const Eigen::VectorXd& norms, const EvalResult& eval,
                                const std::vector<int>& train_counts);
BalanceReport MakeBalanceReport(const Model& model, const Dataset& dataset);

// Plot data: rank,class,count,norm with rank 1 the most frequent class.
void WriteNormCurveCsv(const BalanceReport& report, std::ostream& out);
void WriteBalanceJson(const BalanceReport& report, std::ostream& out);

// Per-epoch metrics of several runs on a shared epoch axis.
struct ComparisonTable {
  std::vector<std::string> labels;
  std::vector<int> epochs;
  // cells[e][r] holds run r at epochs[e] when that run reached it.
  std::vector<std::vector<std::optional<EpochRecord>>> cells;
  std::vector<EpochRecord> finals;
};

// Throws std::invalid_argument for an empty list or runs that disagree on the
// number of classes.
ComparisonTable CompareRuns(std::span<const RunLog> logs);

// epoch,<label>.loss,<label>.acc_overall,... for every run.
void WriteComparisonCsv(const ComparisonTable& table, std::ostream& out);
// One row per run with its final metrics and per-group deltas against the
// first run.
void WriteFinalTableCsv(const ComparisonTable& table, std::ostream& out);

}  // namespace bacl

#endif  // BACL_METRICS_H_
