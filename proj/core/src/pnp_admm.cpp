#include "pnpmri/pnp_admm.hpp"

#include "pnpmri/error.hpp"
#include "pnpmri/metrics.hpp"

#include <cmath>

namespace pnpmri {

void PnpConfig::validate() const {
  if (!(lambda > 0.0)) throw Error("PnpConfig: lambda must be positive");
  if (early_exit_tol < 0.0) throw Error("PnpConfig: early_exit_tol must be nonnegative");
  cg.validate();
}

double data_residual(const EncodingOperator &op, const KSpaceData &d, const Image &x) {
  const KSpaceData ex = op.forward(x);
  double acc = 0.0;
  const auto a = ex.samples().values();
  const auto b = d.samples().values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i] - b[i]);
  return std::sqrt(acc);
}

AdmmState initial_state(const EncodingOperator &op, const KSpaceData &d) {
  AdmmState s;
  s.x = zero_filled_recon(op, d);
  s.a = s.x;
  s.u = Image(s.x.rows(), s.x.cols());
  return s;
}

AdmmState pnp_step(const AdmmState &state, const EncodingOperator &op, const KSpaceData &d, const Denoiser &den,
                   const PnpConfig &cfg, const Image *reference) {
  AdmmState next;
  const ProxResult pr = prox(op, d, state.x - state.u, cfg.lambda, cfg.cg);
  next.a = pr.z;
  next.x = denoise_complex(den, next.a + state.u);
  next.u = state.u + (next.a - next.x);
  next.iteration = state.iteration + 1;
  next.history = state.history;
  if (cfg.record_history) {
    IterationRecord rec;
    rec.iteration = next.iteration;
    rec.primal_gap = norm2((next.a - next.x).values());
    rec.prox_residual = pr.final_relative_residual;
    rec.cg_iterations = pr.iterations_used;
    rec.prox_nonconverged = pr.nonconverged;
    rec.data_residual = data_residual(op, d, next.x);
    if (reference) rec.psnr = psnr(*reference, magnitude(next.x)).db;
    next.history.push_back(rec);
  } else if (pr.nonconverged) {
    // Keep the flag even when full history is off.
    IterationRecord rec;
    rec.iteration = next.iteration;
    rec.prox_residual = pr.final_relative_residual;
    rec.cg_iterations = pr.iterations_used;
    rec.prox_nonconverged = true;
    next.history.push_back(rec);
  }
  return next;
}

PnpResult pnp_reconstruct(const EncodingOperator &op, const KSpaceData &d, const Denoiser &den,
                          const PnpConfig &cfg, const Image *reference) {
  cfg.validate();
  AdmmState state = initial_state(op, d);
  for (std::size_t i = 0; i < cfg.num_iterations; ++i) {
    const Image previous = state.x;
    state = pnp_step(state, op, d, den, cfg, reference);
    if (cfg.early_exit_tol > 0.0) {
      const double base = norm2(previous.values());
      if (base > 0.0 && norm2((state.x - previous).values()) / base < cfg.early_exit_tol) break;
    }
  }
  PnpResult result;
  result.x = std::move(state.x);
  result.history = std::move(state.history);
  for (const auto &rec : result.history) result.any_nonconverged |= rec.prox_nonconverged;
  return result;
}

} // namespace pnpmri
