#pragma once

namespace driftbench::cli {

/// Exit codes: 0 success, 2 validation/usage error, 1 anything else.
int run(int argc, char** argv);

}  // namespace driftbench::cli
