#include "bacl/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bacl {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(std::string_view key, std::string_view value) {
  throw std::invalid_argument("config key '" + std::string(key) + "': cannot parse value '" +
                              std::string(value) + "'");
}

int ToInt(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) BadValue(key, v);
  return out;
}

double ToReal(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    BadValue(key, v);
  }
  if (used != s.size()) BadValue(key, v);
  return out;
}

bool ToBool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  BadValue(key, v);
}

std::vector<int> ToIntList(std::string_view key, std::string_view v) {
  std::vector<int> out;
  if (Trim(v).empty()) return out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto part = Trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    out.push_back(ToInt(key, part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string Real(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

struct Setting {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define BACL_INT(KEY, FIELD)                                                          \
  Setting{KEY, [](RunConfig& c, std::string_view k, std::string_view v) {             \
            c.FIELD = ToInt(k, v);                                                    \
          },                                                                          \
          [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define BACL_REAL(KEY, FIELD)                                                         \
  Setting{KEY, [](RunConfig& c, std::string_view k, std::string_view v) {             \
            c.FIELD = ToReal(k, v);                                                   \
          },                                                                          \
          [](const RunConfig& c) { return Real(c.FIELD); }}
#define BACL_BOOL(KEY, FIELD)                                                         \
  Setting{KEY, [](RunConfig& c, std::string_view k, std::string_view v) {             \
            c.FIELD = ToBool(k, v);                                                   \
          },                                                                          \
          [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}

const std::vector<Setting>& Settings() {
  static const std::vector<Setting> settings = {
      BACL_INT("task.num_classes", task.num_classes),
      BACL_INT("task.feature_dim", task.feature_dim),
      BACL_INT("task.max_count", task.max_count),
      BACL_INT("task.min_count", task.min_count),
      BACL_REAL("task.power", task.power),
      BACL_INT("task.background_count", task.background_count),
      BACL_REAL("task.class_sep", task.class_sep),
      BACL_REAL("task.noise_scale", task.noise_scale),
      BACL_REAL("task.background_scale", task.background_scale),
      BACL_INT("task.test_per_class", task.test_per_class),
      BACL_INT("task.test_background", task.test_background),
      Setting{"indicator.kind",
              [](RunConfig& c, std::string_view, std::string_view v) {
                c.train.hp.indicator_kind = ParseIndicatorKind(v);
              },
              [](const RunConfig& c) {
                return std::string(IndicatorKindName(c.train.hp.indicator_kind));
              }},
      BACL_REAL("indicator.gamma", train.hp.gamma),
      BACL_REAL("fcbl.alpha", train.hp.alpha),
      BACL_REAL("fcbl.p_thresh", train.hp.p_thresh),
      BACL_REAL("fhm.beta", train.hp.beta),
      BACL_INT("fhm.c", train.hp.c_sampled),
      BACL_INT("fhm.m", train.hp.m_per_class),
      BACL_REAL("fhm.proposal_noise", train.proposal_noise),
      BACL_REAL("optim.lr", train.hp.lr.initial),
      BACL_REAL("optim.lr_decay", train.hp.lr.decay_factor),
      Setting{"optim.decay_epochs",
              [](RunConfig& c, std::string_view k, std::string_view v) {
                c.train.hp.lr.decay_epochs = ToIntList(k, v);
              },
              [](const RunConfig& c) {
                std::string s;
                for (int e : c.train.hp.lr.decay_epochs) {
                  if (!s.empty()) s += ',';
                  s += std::to_string(e);
                }
                return s;
              }},
      BACL_REAL("optim.momentum", train.hp.momentum),
      BACL_REAL("optim.weight_decay", train.hp.weight_decay),
      BACL_INT("train.epochs_stage1", train.hp.epochs_stage1),
      BACL_INT("train.epochs_stage2", train.hp.epochs_stage2),
      BACL_INT("train.batch_size", train.batch_size),
      BACL_INT("train.extractor_layers", train.extractor_layers),
      BACL_REAL("train.head_init_scale", train.head_init_scale),
      BACL_BOOL("train.reinit_head", train.reinit_head),
      BACL_BOOL("train.use_margin", train.use_margin),
      BACL_BOOL("train.use_weight_term", train.use_weight_term),
      BACL_BOOL("train.use_fhm", train.use_fhm),
  };
  return settings;
}

#undef BACL_INT
#undef BACL_REAL
#undef BACL_BOOL

}  // namespace

RunConfig DefaultRunConfig() {
  RunConfig c;
  c.task.num_classes = 30;
  c.task.feature_dim = 32;
  c.task.max_count = 5000;
  c.task.min_count = 5;
  c.task.power = PowerForRange(5000, 5, 30);
  // The task's mean-reduced losses need a larger step than the detector recipe.
  c.train.hp.lr.initial = 0.2;
  return c;
}

void ApplySetting(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& s : Settings()) {
    if (s.key == key) {
      s.set(config, key, Trim(value));
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

RunConfig ParseConfig(std::istream& in, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    ApplySetting(base, Trim(view.substr(0, eq)), Trim(view.substr(eq + 1)));
  }
  return base;
}

RunConfig LoadConfigFile(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  return ParseConfig(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> ConfigEntries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : Settings()) out.emplace_back(std::string(s.key), s.get(config));
  return out;
}

void WriteConfig(const RunConfig& config, std::ostream& out) {
  for (const auto& [k, v] : ConfigEntries(config)) out << k << " = " << v << '\n';
}

}  // namespace bacl
