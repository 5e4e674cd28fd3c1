#pragma once

// Command implementations behind the `ecdrive` executable. Each returns the
// process exit code and writes human-readable output to the given streams.

#include <ostream>
#include <string>

namespace ecdrive::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;     // invalid config, no trace matched
inline constexpr int kExitIo = 3;         // output could not be written
inline constexpr int kExitIntegrity = 4;  // malformed or inconsistent trace

/// Frozen CSV header written by cmd_summarize.
extern const char* const kCsvHeader;

int cmd_run(const std::string& config_path, std::ostream& out,
            std::ostream& err);
int cmd_summarize(const std::string& trace_glob, const std::string& out_csv,
                  std::ostream& out, std::ostream& err);
int cmd_validate(const std::string& config_path, std::ostream& out,
                 std::ostream& err);

}  // namespace ecdrive::cli
