#ifndef BACL_CONFIG_H_
#define BACL_CONFIG_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bacl/datagen.h"
#include "bacl/trainer.h"

namespace bacl {

// Everything a run needs besides the master seed.
struct RunConfig {
  TaskSpec task;
  TrainConfig train;
};

// The desk-scale long-tailed task and its training recipe.
RunConfig DefaultRunConfig();

// Applies one `key = value` setting. Throws std::invalid_argument naming the
// key when it is unknown or its value does not parse.
void ApplySetting(RunConfig& config, std::string_view key, std::string_view value);

// Flat dotted-key text format: one `key = value` per line, `#` starts a
// comment. Settings are applied on top of `base`; errors name the line.
RunConfig ParseConfig(std::istream& in, RunConfig base = DefaultRunConfig());
RunConfig LoadConfigFile(const std::string& path, RunConfig base = DefaultRunConfig());

// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> ConfigEntries(const RunConfig& config);
void WriteConfig(const RunConfig& config, std::ostream& out);

}  // namespace bacl

#endif  // BACL_CONFIG_H_
