#pragma once

namespace dsfp::cli {

// Entry point of the `dsfp` tool. Returns the process exit code; failures
// print one JSON error record on stderr and return nonzero.
int run(int argc, const char* const* argv);

}  // namespace dsfp::cli
