#pragma once
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cit/config.hpp"
#include "cit/convex_integration.hpp"

namespace cit {

/// Fault injection for the driver's self-test.
enum class Sabotage { none, r_osc_sign, com2_sign };
/// Throws ConfigError on an unknown name.
Sabotage parse_sabotage(const std::string& name);

struct CheckOutcome {
  std::string name;
  int q = -1;  ///< level, -1 when global
  bool asserted = true;
  bool passed = true;
  double value = 0, tolerance = 0;
};

struct PipelineResult {
  std::vector<CheckOutcome> checks;
  bool passed() const;
  /// 0 when every asserted check passed, 2 otherwise.
  int exit_code() const { return passed() ? 0 : 2; }
};

/// Samples the noise, iterates q_max times, runs the enabled checks and
/// writes CSV reports, summary.txt and config.resolved into config.out_dir.
/// Throws ConfigError for invalid parameters and ResourceError when the grid
/// or the time axis cannot carry the run.
PipelineResult run_pipeline(const RunConfig& config, Sabotage sabotage = Sabotage::none, std::ostream* log = nullptr);

struct ManifestEntry {
  std::string file;
  std::string role;
  int q = 0;
  double time = 0;
  bool operator==(const ManifestEntry&) const = default;
};

/// CIT3 dumps of v, R, p and z at one sample plus manifest.txt ("file role q
/// time" per line, appended when the manifest exists).
std::vector<ManifestEntry> export_fields(const IterationState& state, int sample, const std::filesystem::path& dir);
/// One tensor dump per stress part.
std::vector<ManifestEntry> export_fields(const StressBreakdown& breakdown, int q, double time,
                                         const std::filesystem::path& dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

}  // namespace cit
