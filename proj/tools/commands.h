#ifndef BACL_TOOLS_COMMANDS_H_
#define BACL_TOOLS_COMMANDS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bacl::cli {

// Runs the `bacl` command line. Returns the process exit code; errors are
// reported as one `error: ...` line on `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a of a file's bytes as 16 hex digits.
std::string FileChecksum(const std::string& path);

}  // namespace bacl::cli

#endif  // BACL_TOOLS_COMMANDS_H_
