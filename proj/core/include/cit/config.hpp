#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cit/noise.hpp"
#include "cit/params.hpp"

namespace cit {

enum class RunMode { nse, euler };

/// Everything a pipeline run needs. Keys in the "key = value" format carry
/// the member names; see parse_config for defaults and required keys.
struct RunConfig {
  SchemeParams scheme;
  int n = 32;
  double dt = 5e-4;
  double horizon = 0;  ///< t1 of the sampled path (t0 = 0)
  std::uint64_t seed = 1;
  int ensemble = 1;
  RunMode mode = RunMode::nse;
  std::vector<std::string> checks{"all"};
  std::filesystem::path out_dir = "cit_out";

  CovarianceSpec noise;  ///< amplitude defaults to the cutoff plateau scale
  std::string directions0 = "345a", directions1 = "345b";
  int lambda = 0;  ///< realized Beltrami frequency, 0 = largest resolved
  bool bifurcate = false;
  double bifurcation_lo = 0, bifurcation_hi = 0;
  double theta = 0.5;
  std::vector<double> ergodic_horizons;  ///< empty: quarter, half and full path
  bool export_fields = false;
  int workers = 1;

  bool check_enabled(const std::string& name) const;
  bool operator==(const RunConfig&) const = default;
};

/// Names accepted in `checks`, besides "all".
const std::vector<std::string>& check_names();
/// Keys that must appear in every config file.
const std::vector<std::string>& required_config_keys();

/// Parses "key = value" lines; '#' starts a comment. Throws ConfigError naming
/// the line for unknown keys and malformed values, and listing missing
/// required keys. mode = euler with nu != 0 is rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config text; parse_config(echo_config(c)) == c.
std::string echo_config(const RunConfig& config);

}  // namespace cit
