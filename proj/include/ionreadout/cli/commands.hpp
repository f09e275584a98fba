#pragma once

#include <filesystem>
#include <iosfwd>

#include "ionreadout/cli/config.hpp"

namespace ionreadout::cli {

/// Settings that affect where and how fast a run happens, never what it produces.
struct Runtime {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Optimal cutoff for the rates, or 0 when there is no signal or no pumping.
double cutoff_for(const ScatteringRates& rates);

/// "I29", "I8", "I0.5": file-name tag for an intensity.
std::string intensity_tag(double intensity);

void cmd_rates(const RunConfig& config, const Runtime& runtime, std::ostream& out);
void cmd_simulate(const RunConfig& config, const Runtime& runtime, std::ostream& out);
void cmd_sweep(const RunConfig& config, const Runtime& runtime, std::ostream& out);
void cmd_optimize(const RunConfig& config, const Runtime& runtime, std::ostream& out);
void cmd_fit(const RunConfig& config, const Runtime& runtime,
             const std::filesystem::path& curve_file, std::ostream& out);

}  // namespace ionreadout::cli
