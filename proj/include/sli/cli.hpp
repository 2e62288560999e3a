#pragma once

namespace sli::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `slicascade` tool. Subcommands: run, screen, refine,
/// train, evaluate, synth. Errors are reported as one JSON line on stderr.
int run(int argc, char** argv);

}  // namespace sli::cli
