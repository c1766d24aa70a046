#include "commands.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "bacl/config.h"
#include "bacl/datagen.h"
#include "bacl/indicators.h"
#include "bacl/metrics.h"
#include "bacl/trainer.h"

namespace bacl::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> overrides;
};

struct TrainArgs {
  std::string mode = "bacl";
  int stage = 1;
  std::string indicator;
  bool no_margin = false;
  bool no_weight_term = false;
  bool no_fhm = false;
  std::string checkpoint;
};

void AddCommon(CLI::App* cmd, CommonArgs& a, bool needs_out) {
  cmd->add_option("--config", a.config_path, "flat key = value config file");
  cmd->add_option("--seed", a.seed, "master seed");
  auto* out = cmd->add_option("--out", a.out, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--set", a.overrides, "override one config key, key=value");
}

RunConfig ResolveConfig(const CommonArgs& a) {
  RunConfig config = a.config_path.empty() ? DefaultRunConfig() : LoadConfigFile(a.config_path);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    ApplySetting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  ValidateTaskSpec(config.task);
  ValidateTrainConfig(config.train);
  return config;
}

void PrepareOutDir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw std::runtime_error("cannot create output directory " + out);
  }
  const fs::path probe = fs::path(out) / ".write-probe";
  {
    std::ofstream test(probe);
    if (!test) throw std::runtime_error("output directory " + out + " is not writable");
  }
  fs::remove(probe, ec);
}

std::ofstream OpenOut(const std::string& dir, const std::string& name) {
  const std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

json ConfigJson(const RunConfig& config) {
  json j = json::object();
  for (const auto& [k, v] : ConfigEntries(config)) j[k] = v;
  return j;
}

json Real(double v) { return std::isfinite(v) ? json(v) : json(); }

void WriteManifest(const std::string& subcommand, const CommonArgs& a, const RunConfig& config,
                   const std::vector<std::string>& artifacts, json extra) {
  json m;
  m["subcommand"] = subcommand;
  m["config_path"] = a.config_path;
  m["resolved_config"] = "config.resolved";
  m["config"] = ConfigJson(config);
  m["seed"] = a.seed;
  m["out"] = a.out;
  for (auto& [k, v] : extra.items()) m[k] = v;
  json sums = json::object();
  for (const auto& name : artifacts) {
    sums[name] = FileChecksum((fs::path(a.out) / name).string());
  }
  m["artifacts"] = sums;
  auto out = OpenOut(a.out, "manifest.json");
  out << m.dump(2) << '\n';
}

void WriteResolvedConfig(const std::string& out_dir, const RunConfig& config) {
  auto out = OpenOut(out_dir, "config.resolved");
  WriteConfig(config, out);
}

int CmdGen(const CommonArgs& a, std::ostream& log) {
  const RunConfig config = ResolveConfig(a);
  PrepareOutDir(a.out);
  const Dataset ds = MakeTask(config.task, a.seed);
  {
    auto out = OpenOut(a.out, "dataset.txt");
    WriteDataset(ds, out);
  }
  {
    auto out = OpenOut(a.out, "groups.csv");
    WriteGroups(ds.counts, out);
  }
  WriteResolvedConfig(a.out, config);
  WriteManifest("gen", a, config, {"dataset.txt", "groups.csv", "config.resolved"}, json::object());
  log << "gen: " << ds.train.size() << " training and " << ds.test.size()
      << " test examples written to " << a.out << '\n';
  return 0;
}

std::string RunLabel(const TrainConfig& t, int stage) {
  std::string label = std::string(TrainModeName(t.mode)) + "-s" + std::to_string(stage);
  if (stage == 2) {
    label += "-" + std::string(IndicatorKindName(t.hp.indicator_kind));
    if (!t.use_margin) label += "-no_margin";
    if (!t.use_weight_term) label += "-no_weight_term";
    if (!t.use_fhm) label += "-no_fhm";
  }
  return label;
}

void WriteBalanceArtifacts(const std::string& dir, const Model& model, const Dataset& ds) {
  const BalanceReport report = MakeBalanceReport(model, ds);
  {
    auto out = OpenOut(dir, "norms.csv");
    WriteNormCurveCsv(report, out);
  }
  auto out = OpenOut(dir, "balance.json");
  WriteBalanceJson(report, out);
}

int CmdTrain(const CommonArgs& a, const TrainArgs& t, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig config = ResolveConfig(a);
  TrainConfig& tc = config.train;
  tc.mode = ParseTrainMode(t.mode);
  tc.seed = a.seed;
  if (!t.indicator.empty()) tc.hp.indicator_kind = ParseIndicatorKind(t.indicator);
  if (t.no_margin) tc.use_margin = false;
  if (t.no_weight_term) tc.use_weight_term = false;
  if (t.no_fhm) tc.use_fhm = false;
  if (t.stage != 1 && t.stage != 2) throw std::invalid_argument("--stage must be 1 or 2");
  if (tc.mode == TrainMode::kBaselineCe && t.stage == 2) {
    throw std::invalid_argument("baseline_ce trains end-to-end and has no stage 2");
  }
  if (tc.mode == TrainMode::kBceObjectness && t.stage == 2) {
    // Decoupled baseline: fine-tune the head with plain BCE.
    tc.use_margin = tc.use_weight_term = tc.use_fhm = false;
  }
  if (t.stage == 2 && t.checkpoint.empty()) {
    throw std::invalid_argument("stage 2 requires --checkpoint pointing at a stage-1 checkpoint");
  }
  if (t.stage == 2 && !fs::exists(t.checkpoint)) {
    throw std::invalid_argument("stage-1 checkpoint not found: " + t.checkpoint);
  }
  PrepareOutDir(a.out);
  const Dataset ds = MakeTask(config.task, a.seed);

  StageResult result;
  if (t.stage == 1) {
    result = TrainStage1(ds, tc);
  } else {
    const Model stage1 = LoadCheckpointFile(t.checkpoint);
    result = TrainStage2(stage1, ds, tc);
  }
  result.log.label = RunLabel(tc, t.stage);

  std::vector<std::string> artifacts = {"checkpoint.txt", "runlog.csv", "norms.csv",
                                        "balance.json", "config.resolved"};
  SaveCheckpointFile(result.model, (fs::path(a.out) / "checkpoint.txt").string());
  {
    auto out = OpenOut(a.out, "runlog.csv");
    WriteRunLogCsv(result.log, out);
  }
  WriteBalanceArtifacts(a.out, result.model, ds);
  WriteResolvedConfig(a.out, config);
  if (result.log.indicators) {
    {
      auto out = OpenOut(a.out, "indicators.csv");
      WriteSnapshotCsv(*result.log.indicators, out);
    }
    {
      auto out = OpenOut(a.out, "confusion_soft.csv");
      WriteMatrixCsv(result.log.indicators->confusion_soft, out);
    }
    auto out = OpenOut(a.out, "confusion_hard.csv");
    WriteMatrixCsv(result.log.indicators->confusion_hard, out);
    artifacts.insert(artifacts.end(), {"indicators.csv", "confusion_soft.csv", "confusion_hard.csv"});
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const EvalResult& e = result.log.final_eval;
  json summary;
  summary["label"] = result.log.label;
  summary["mode"] = std::string(TrainModeName(tc.mode));
  summary["stage"] = t.stage;
  summary["seed"] = a.seed;
  summary["num_classes"] = ds.num_classes();
  summary["config"] = ConfigJson(config);
  summary["final"] = {{"acc_overall", Real(e.mean)},
                      {"acc_rare", Real(e.rare)},
                      {"acc_common", Real(e.common)},
                      {"acc_frequent", Real(e.frequent)},
                      {"acc_background", Real(e.background)},
                      {"norm_cv", Real(result.log.epochs.back().norm_cv)}};
  summary["wall_time_s"] = wall;
  {
    auto out = OpenOut(a.out, "summary.json");
    out << summary.dump(2) << '\n';
  }
  json extra;
  extra["mode"] = t.mode;
  extra["stage"] = t.stage;
  extra["label"] = result.log.label;
  if (t.stage == 2) {
    extra["checkpoint"] = t.checkpoint;
    extra["checkpoint_checksum"] = FileChecksum(t.checkpoint);
  }
  WriteManifest("train", a, config, artifacts, extra);
  log << "train: " << result.log.label << " rare " << e.rare << " common " << e.common
      << " frequent " << e.frequent << " overall " << e.mean << '\n';
  return 0;
}

int CmdEval(const CommonArgs& a, const std::string& checkpoint, std::ostream& log) {
  const RunConfig config = ResolveConfig(a);
  PrepareOutDir(a.out);
  const Dataset ds = MakeTask(config.task, a.seed);
  const Model model = LoadCheckpointFile(checkpoint);
  if (model.head.num_classes() != ds.num_classes()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(model.head.num_classes()) +
                                " classes, task has " + std::to_string(ds.num_classes()));
  }
  const EvalResult e = Evaluate(model, ds.test, ds.counts);
  {
    auto out = OpenOut(a.out, "eval.csv");
    out << std::setprecision(10) << "class,count,group,accuracy\n";
    for (int i = 0; i < ds.num_classes(); ++i) {
      out << i << ',' << ds.counts[i] << ',' << GroupName(GroupOf(ds.counts[i])) << ','
          << e.per_class[i] << '\n';
    }
  }
  WriteBalanceArtifacts(a.out, model, ds);
  WriteResolvedConfig(a.out, config);
  json extra;
  extra["checkpoint"] = checkpoint;
  extra["checkpoint_checksum"] = FileChecksum(checkpoint);
  WriteManifest("eval", a, config, {"eval.csv", "norms.csv", "balance.json", "config.resolved"},
                extra);
  log << "eval: rare " << e.rare << " common " << e.common << " frequent " << e.frequent
      << " overall " << e.mean << " background " << e.background << '\n';
  return 0;
}

int CmdReport(const std::vector<std::string>& dirs, const std::string& out_dir,
              std::ostream& log) {
  if (dirs.empty()) throw std::invalid_argument("report needs at least one run directory");
  std::vector<RunLog> logs;
  json balances = json::array();
  for (const auto& dir : dirs) {
    std::ifstream runlog(fs::path(dir) / "runlog.csv");
    std::ifstream summary(fs::path(dir) / "summary.json");
    if (!runlog || !summary) {
      throw std::invalid_argument("run directory " + dir + " lacks runlog.csv or summary.json");
    }
    const json s = json::parse(summary);
    RunLog rl;
    rl.label = s.value("label", fs::path(dir).filename().string());
    rl.num_classes = s.at("num_classes").get<int>();
    rl.epochs = ReadRunLogCsv(runlog);
    for (const auto& other : logs) {
      if (other.label == rl.label) rl.label += "#" + std::to_string(logs.size());
    }
    json entry = {{"label", rl.label}, {"dir", dir}};
    std::ifstream balance(fs::path(dir) / "balance.json");
    if (balance) entry["balance"] = json::parse(balance);
    balances.push_back(entry);
    logs.push_back(std::move(rl));
  }
  const ComparisonTable table = CompareRuns(logs);
  PrepareOutDir(out_dir);
  {
    auto out = OpenOut(out_dir, "comparison.csv");
    WriteComparisonCsv(table, out);
  }
  {
    auto out = OpenOut(out_dir, "final.csv");
    WriteFinalTableCsv(table, out);
  }
  {
    auto out = OpenOut(out_dir, "report.json");
    out << json{{"runs", balances}}.dump(2) << '\n';
  }
  json m;
  m["subcommand"] = "report";
  m["runs"] = dirs;
  m["out"] = out_dir;
  json sums = json::object();
  for (const char* name : {"comparison.csv", "final.csv", "report.json"}) {
    sums[name] = FileChecksum((fs::path(out_dir) / name).string());
  }
  m["artifacts"] = sums;
  {
    auto out = OpenOut(out_dir, "manifest.json");
    out << m.dump(2) << '\n';
  }
  log << "report: " << logs.size() << " runs compared in " << out_dir << '\n';
  return 0;
}

}  // namespace

std::string FileChecksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Balanced classification with long/short-term indicators"};
  app.name("bacl");
  app.require_subcommand(1);

  CommonArgs gen_args, train_common, eval_args;
  TrainArgs train_args;
  std::string eval_checkpoint;
  std::vector<std::string> report_dirs;
  std::string report_out;

  auto* gen = app.add_subcommand("gen", "generate a synthetic long-tailed task");
  AddCommon(gen, gen_args, true);

  auto* train = app.add_subcommand("train", "train one stage");
  AddCommon(train, train_common, true);
  train->add_option("--mode", train_args.mode, "baseline_ce | bce_objectness | bacl");
  train->add_option("--stage", train_args.stage, "1 or 2");
  train->add_option("--indicator", train_args.indicator, "long-term indicator kind");
  train->add_flag("--no-margin", train_args.no_margin, "disable the class-aware margin");
  train->add_flag("--no-weight-term", train_args.no_weight_term, "disable the weight term");
  train->add_flag("--no-fhm", train_args.no_fhm, "disable feature hallucination");
  train->add_option("--checkpoint", train_args.checkpoint, "stage-1 checkpoint for stage 2");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the held-out split");
  AddCommon(eval, eval_args, true);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")->required();

  auto* report = app.add_subcommand("report", "compare finished runs");
  report->add_option("runs", report_dirs, "run directories")->required();
  report->add_option("--out", report_out, "output directory")->required();

  std::vector<const char*> argv = {"bacl"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) return CmdGen(gen_args, out);
    if (train->parsed()) return CmdTrain(train_common, train_args, out);
    if (eval->parsed()) return CmdEval(eval_args, eval_checkpoint, out);
    if (report->parsed()) return CmdReport(report_dirs, report_out, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}

}  // namespace bacl::cli
