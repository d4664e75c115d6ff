#pragma once

#include <functional>
#include <vector>

#include "acr/lowrank.hpp"

namespace acr {

using LinearOperator = std::function<Vector(const Vector&)>;

struct KrylovOptions {
  double tol = 1e-8;   ///< relative residual target (true residual)
  int max_iters = 100;
  int restart = 30;    ///< GMRES restart length

  void validate() const;
};

struct KrylovResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  ///< residual norms, history[0] at iteration 0
};

/// Preconditioned conjugate gradient. apply_m approximates the inverse action
/// of the (SPD) operator; pass the identity for no preconditioning.
/// Convergence is declared on the true relative residual |b - A x| / |b|.
KrylovResult cg(const LinearOperator& apply_a, const LinearOperator& apply_m,
                const Vector& b, const KrylovOptions& opts);

/// Left-preconditioned restarted GMRES with modified Gram-Schmidt. The
/// history records preconditioned residual norms; the converged flag is
/// decided on the true relative residual.
KrylovResult gmres(const LinearOperator& apply_a, const LinearOperator& apply_m,
                   const Vector& b, const KrylovOptions& opts);

/// Convenience identity preconditioner.
inline Vector identity_preconditioner(const Vector& v) { return v; }

}  // namespace acr
