#pragma once

namespace vsl {

/// Entry point of the `vsl` command-line tool. Returns 0 on success, 1 when a
/// check fails, 2 on usage errors.
int run_cli(int argc, char** argv);

}  // namespace vsl
