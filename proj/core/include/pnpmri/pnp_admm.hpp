#pragma once

#include "pnpmri/denoiser.hpp"
#include "pnpmri/prox.hpp"

#include <optional>
#include <vector>

namespace pnpmri {

struct PnpConfig {
  double lambda = 1.0;
  std::size_t num_iterations = 10;
  CgConfig cg;
  bool record_history = true;
  /// Stop once ||x^i - x^{i-1}|| / ||x^{i-1}|| falls below this; 0 disables.
  double early_exit_tol = 0.0;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double primal_gap = 0.0;        ///< ||a^i - x^i||
  double prox_residual = 0.0;     ///< final relative CG residual of the prox solve
  std::size_t cg_iterations = 0;
  bool prox_nonconverged = false;
  double data_residual = 0.0;     ///< ||E x^i - d||
  std::optional<double> psnr;     ///< vs the optional reference magnitude
};

struct AdmmState {
  Image x;
  Image a;
  Image u;
  std::size_t iteration = 0;
  std::vector<IterationRecord> history;
};

struct PnpResult {
  Image x;
  std::vector<IterationRecord> history;
  bool any_nonconverged = false;
};

/// x^0 = E^H d, u^0 = 0, a^0 = x^0.
AdmmState initial_state(const EncodingOperator &op, const KSpaceData &d);

/// One ADMM plug-and-play iteration:
///   a = prox(d, S, x - u; lambda), x' = D(a + u), u' = u + (a - x').
AdmmState pnp_step(const AdmmState &state, const EncodingOperator &op, const KSpaceData &d, const Denoiser &den,
                   const PnpConfig &cfg, const Image *reference = nullptr);

/// Runs cfg.num_iterations steps from initial_state and returns x^N.
/// `reference`, when given, is a magnitude image used to log PSNR per iteration.
PnpResult pnp_reconstruct(const EncodingOperator &op, const KSpaceData &d, const Denoiser &den,
                          const PnpConfig &cfg, const Image *reference = nullptr);

/// ||E x - d||.
double data_residual(const EncodingOperator &op, const KSpaceData &d, const Image &x);

} // namespace pnpmri
