// cit: runs the construction from a config file and writes the reports.
//
//   cit --config run.cfg [--out DIR] [--seed N] [--checks a,b] [--desk-mode]
//       [--sabotage NAME] [--workers N]
//
// Exit codes: 0 every asserted identity holds, 2 identity failure or
// runtime error, 3 configuration error, 4 resource error.

#include <iostream>
#include <new>
#include <sstream>

#include "CLI11.hpp"
#include "cit/config.hpp"
#include "cit/error.hpp"
#include "cit/pipeline.hpp"

namespace {

constexpr int kIdentityFailure = 2;
constexpr int kConfigError = 3;
constexpr int kResourceError = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic convex integration driver"};
  std::string config_path, out_dir, checks, sabotage_name = "none";
  std::uint64_t seed = 0;
  int workers = 0;
  bool desk_mode = false, quiet = false;
  app.add_option("--config", config_path, "key = value configuration file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides 'out')");
  auto* seed_opt = app.add_option("--seed", seed, "noise seed (overrides 'seed')");
  auto* checks_opt = app.add_option("--checks", checks, "comma separated checks or 'all'");
  app.add_flag("--desk-mode", desk_mode, "demote asymptotic parameter constraints to warnings");
  app.add_option("--sabotage", sabotage_name, "fault injection: none, r_osc_sign, com2_sign");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (overrides 'workers')")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "no progress output");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    cit::RunConfig config = cit::load_config(config_path);
    if (*out_opt) config.out_dir = out_dir;
    if (*seed_opt) config.seed = seed;
    if (*workers_opt) config.workers = workers;
    if (desk_mode) config.scheme.desk_mode = true;
    if (*checks_opt) {
      config.checks.clear();
      std::stringstream list(checks);
      for (std::string item; std::getline(list, item, ',');)
        if (!item.empty()) config.checks.push_back(item);
    }
    // Overrides go through the same validation as the file.
    config = cit::parse_config(cit::echo_config(config));
    const cit::Sabotage sabotage = cit::parse_sabotage(sabotage_name);
    const cit::PipelineResult result = cit::run_pipeline(config, sabotage, quiet ? nullptr : &std::cerr);
    for (const auto& c : result.checks) {
      std::cout << (c.asserted ? (c.passed ? "PASS   " : "FAIL   ") : "REPORT ") << c.name;
      if (c.q >= 0) std::cout << " [q=" << c.q << "]";
      std::cout << ": " << c.value << " (tolerance " << c.tolerance << ")\n";
    }
    std::cout << "artifacts in " << config.out_dir.string() << '\n';
    return result.passed() ? 0 : kIdentityFailure;
  } catch (const cit::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cit::ResourceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kResourceError;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return kResourceError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIdentityFailure;
  }
}
