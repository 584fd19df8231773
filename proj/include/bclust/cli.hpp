#pragma once

namespace bclust {

/// Command-line entry point. Returns the process exit code: 0 on success,
/// 1 on usage errors, 2 on data errors.
int run(int argc, const char* const* argv);

}  // namespace bclust
