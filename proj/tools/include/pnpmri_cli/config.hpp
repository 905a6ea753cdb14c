#pragma once

#include <pnpmri/denoiser.hpp>
#include <pnpmri/grappa.hpp>
#include <pnpmri/io.hpp>
#include <pnpmri/prox.hpp>
#include <pnpmri/simulate.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpmri::cli {

/// Invalid configuration or arguments (exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output (exit code 3).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Method { ZeroFilled, Grappa, Pnp };
std::string to_string(Method m);
Method method_from_string(const std::string &name);

/// Which coil sensitivities the model-based methods use.
enum class MapsSource {
  Estimated, ///< low-resolution estimate from the acquisition's ACS block
  Simulated, ///< the generating maps (inputs.maps for reconstruct)
};

struct PnpSettings {
  double lambda = 1.0;
  std::size_t iterations = 10;
  CgConfig cg;
  std::string checkpoint;
};

struct TrainSettings {
  std::size_t pairs = 200;
  /// Training phantom k uses phantom seed phantom_seed + k.
  std::uint64_t phantom_seed = 1000;
  std::vector<double> noise_sigmas{0.02, 0.05, 0.1};
  std::size_t aliased_every = 4;
  CnnArchitecture arch;
  AdamConfig adam;
};

struct CompareSettings {
  std::vector<Method> methods{Method::ZeroFilled, Method::Grappa, Method::Pnp};
  /// Empty means the top-level mask only.
  std::vector<MaskSpec> masks;
  std::size_t cases = 10;
  bool png = true;
};

struct Inputs {
  std::string kspace;
  std::string truth;
  std::string maps;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  PhantomSpec phantom;
  std::size_t coils = 4;
  MaskSpec mask;
  double noise_sigma = 0.02;
  Method method = Method::Pnp;
  MapsSource maps = MapsSource::Estimated;
  PnpSettings pnp;
  GrappaOptions grappa;
  TrainSettings train;
  CompareSettings compare;
  Inputs inputs;

  ExperimentConfig();
  void validate() const;
  Json to_json() const;
};

/// Command-line flags that take precedence over the configuration file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> method;
  std::optional<double> lambda;
  std::optional<std::size_t> iters;
};

/// Parses `text`, applies `o` and validates the result. Syntax errors carry
/// "<source>:<line>:<column>", semantic errors the JSON pointer of the
/// offending field. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string &text, const std::string &source = "<config>",
                              const Overrides &o = {});
ExperimentConfig load_config(const std::string &path, const Overrides &o = {});
void apply_overrides(ExperimentConfig &cfg, const Overrides &o);

/// Deterministic 64-bit seed derived from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace pnpmri::cli
