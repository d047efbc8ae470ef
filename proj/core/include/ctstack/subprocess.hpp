#pragma once

#include <string>
#include <vector>

namespace ctstack {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string output;  // stdout and stderr, interleaved, truncated at 64 KiB
};

/// Runs argv[0] with the given arguments, capturing combined output.
/// On timeout the process is killed and `timed_out` is set.
ProcessResult run_process(const std::vector<std::string>& argv,
                          double timeout_seconds);

/// Whitespace-splits a command line into argv entries (no shell quoting).
std::vector<std::string> split_command(const std::string& command);

}  // namespace ctstack
