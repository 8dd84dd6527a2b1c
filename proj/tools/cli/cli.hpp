#pragma once

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace mcjudge::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalid = 1,    ///< validation or configuration error
    kTransport = 2,  ///< backend unreachable or misbehaving after retries
    kPartial = 3,    ///< interrupted; rerun with --resume
};

/// Set from a signal handler to stop an in-progress grade run.
std::atomic<bool>& cancel_flag();

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcjudge::cli
