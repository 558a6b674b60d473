#pragma once

// Entry point of the `evseg` command-line tool, callable in-process.
//
//   evseg run    --input s.evsg --out dir/      online training, loss traces
//   evseg gate   --input dir/losses.csv --out g/ detections over a (psi, phi) grid
//   evseg eval   --input g/ --annotations a.csv --out e/
//   evseg synth  --out dir/ [--scenario s.yaml]  synthetic stream + annotations

#include <iosfwd>
#include <string>
#include <vector>

namespace evseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int evseg_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evseg::cli
