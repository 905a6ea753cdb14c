#include "pnpmri/prox.hpp"

#include "pnpmri/error.hpp"

#include <cmath>

namespace pnpmri {

void CgConfig::validate() const {
  if (!(tol > 0.0)) throw Error("CgConfig: tol must be positive");
  if (max_iters < 1) throw Error("CgConfig: max_iters must be at least 1");
}

ProxResult cg_solve(const LinearMap &apply, const Image &rhs, const CgConfig &cfg, const std::optional<Image> &initial) {
  cfg.validate();
  ProxResult result;
  const double rhs_norm = norm2(rhs.values());
  if (rhs_norm == 0.0) {
    result.z = Image(rhs.rows(), rhs.cols());
    result.residual_history.push_back(0.0);
    return result;
  }

  Image x = initial ? *initial : Image(rhs.rows(), rhs.cols());
  if (!x.same_shape(rhs)) throw DimensionMismatch("cg_solve: initial guess shape mismatch");
  Image r = initial ? rhs - apply(x) : rhs;
  Image p = r;
  double rr = std::real(inner(r.values(), r.values()));
  result.residual_history.push_back(std::sqrt(rr) / rhs_norm);

  std::size_t it = 0;
  while (std::sqrt(rr) / rhs_norm > cfg.tol && it < cfg.max_iters) {
    const Image ap = apply(p);
    const double pap = std::real(inner(p.values(), ap.values()));
    if (!(pap > 0.0)) break; // breakdown: operator not positive definite along p
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_next = std::real(inner(r.values(), r.values()));
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
    ++it;
    result.residual_history.push_back(std::sqrt(rr) / rhs_norm);
  }

  // Report the true residual rather than the recurrence value.
  const Image true_r = rhs - apply(x);
  result.final_relative_residual = norm2(true_r.values()) / rhs_norm;
  result.iterations_used = it;
  result.nonconverged = result.final_relative_residual > cfg.tol;
  result.z = std::move(x);
  return result;
}

Image normal_apply(const EncodingOperator &op, double lambda, const Image &z) {
  return axpy(z, lambda, op.normal(z));
}

ProxResult prox(const EncodingOperator &op, const KSpaceData &d, const Image &x_tilde, double lambda,
                const CgConfig &cfg) {
  if (!(lambda > 0.0)) throw Error("prox: lambda must be positive");
  if (x_tilde.rows() != op.rows() || x_tilde.cols() != op.cols()) {
    throw DimensionMismatch("prox: x_tilde shape does not match operator");
  }
  const Image rhs = axpy(x_tilde, lambda, op.adjoint(d));
  return cg_solve([&](const Image &z) { return normal_apply(op, lambda, z); }, rhs, cfg, x_tilde);
}

double prox_objective(const EncodingOperator &op, const KSpaceData &d, const Image &x_tilde, double lambda,
                      const Image &z) {
  const Image diff = z - x_tilde;
  const KSpaceData ez = op.forward(z);
  double data = 0.0;
  for (std::size_t i = 0; i < ez.samples().values().size(); ++i) {
    data += std::norm(ez.samples().values()[i] - d.samples().values()[i]);
  }
  const double n = norm2(diff.values());
  return 0.5 * n * n + 0.5 * lambda * data;
}

} // namespace pnpmri
