#pragma once

#include "pnpmri_cli/config.hpp"

#include <pnpmri/metrics.hpp>
#include <pnpmri/pnp_admm.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace pnpmri::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNonConvergence = 4,
};

/// One parsed command line. `config_path` may be empty for evaluate.
struct Invocation {
  std::string command;
  std::string config_path;
  Overrides overrides;
  std::vector<std::string> positional;
};

/// Runs a command and maps failures to exit codes; diagnostics go to `err`.
int dispatch(const Invocation &inv, std::ostream &out, std::ostream &err);

// Individual commands. They throw ConfigError, IoError or library errors and
// return kExitOk or kExitNonConvergence.
int cmd_simulate(const ExperimentConfig &cfg, std::ostream &out);
int cmd_train(const ExperimentConfig &cfg, std::ostream &out);
int cmd_reconstruct(const ExperimentConfig &cfg, std::ostream &out);
/// `maps_path` (optional) restricts metrics to the maps' support.
int cmd_evaluate(const std::string &reference_path, const std::string &test_path, const std::string &maps_path,
                 const std::string &out_dir, std::ostream &out);
int cmd_compare(const ExperimentConfig &cfg, std::ostream &out);

/// Everything a reconstruction needs besides the method settings.
struct Acquisition {
  KSpaceData data;
  SensitivityMaps maps;
};

struct ReconOutcome {
  Image image; ///< complex for zero-filled and pnp, magnitude for grappa
  std::vector<IterationRecord> history;
  bool nonconverged = false;
};

/// `den` is required for pnp and ignored otherwise.
ReconOutcome reconstruct(Method method, const ExperimentConfig &cfg, const Acquisition &acq, const Denoiser *den,
                         const Image *reference = nullptr);

Json metric_report(const std::string &method, const std::string &mask, const Image &reference, const Image &test,
                   std::span<const std::uint8_t> support);

} // namespace pnpmri::cli
