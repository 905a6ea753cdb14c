#pragma once

#include "pnpmri/operators.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pnpmri {

struct CgConfig {
  double tol = 1e-8;          ///< relative residual ||b - Ax|| / ||b||
  std::size_t max_iters = 200;

  void validate() const;
};

struct ProxResult {
  Image z;
  std::size_t iterations_used = 0;
  double final_relative_residual = 0.0;
  /// Set when max_iters was reached with the residual above tol.
  bool nonconverged = false;
  /// Relative residual after each iteration, starting with the initial guess.
  std::vector<double> residual_history;
};

using LinearMap = std::function<Image(const Image &)>;

/// Conjugate gradient for a Hermitian positive definite `apply`.
/// Starts from `initial` when given, zero otherwise.
ProxResult cg_solve(const LinearMap &apply, const Image &rhs, const CgConfig &cfg,
                    const std::optional<Image> &initial = std::nullopt);

/// z + lambda * E^H E z.
Image normal_apply(const EncodingOperator &op, double lambda, const Image &z);

/// argmin_z 1/2 ||z - x_tilde||^2 + lambda/2 ||E z - d||^2, solved by CG on
/// (I + lambda E^H E) z = x_tilde + lambda E^H d with x_tilde as the warm start.
ProxResult prox(const EncodingOperator &op, const KSpaceData &d, const Image &x_tilde, double lambda,
                const CgConfig &cfg);

/// Value of the proximal objective at z.
double prox_objective(const EncodingOperator &op, const KSpaceData &d, const Image &x_tilde, double lambda,
                      const Image &z);

} // namespace pnpmri
