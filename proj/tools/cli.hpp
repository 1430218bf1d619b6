#pragma once

#include <iosfwd>

namespace pics::cli {

/// Runs one pipeline stage. Returns 0 on success, 1 on usage or I/O errors and
/// 2 on numerical failure; messages go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pics::cli
