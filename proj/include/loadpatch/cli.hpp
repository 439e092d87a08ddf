#pragma once

#include <iosfwd>

namespace loadpatch {

// Entry point behind the loadpatch binary. Returns 0 on success, 1 on
// pipeline errors, 2 on usage errors. Re-entrant so tests can drive it
// in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace loadpatch
