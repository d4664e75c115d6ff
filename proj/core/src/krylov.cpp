#include "acr/krylov.hpp"

#include <cmath>

#include "acr/errors.hpp"

namespace acr {

void KrylovOptions::validate() const {
  if (!(tol > 0.0)) throw InvalidInputError("krylov tolerance must be positive");
  if (max_iters < 1) throw InvalidInputError("max_iters must be at least 1");
  if (restart < 1) throw InvalidInputError("restart length must be at least 1");
}

KrylovResult cg(const LinearOperator& apply_a, const LinearOperator& apply_m,
                const Vector& b, const KrylovOptions& opts) {
  opts.validate();
  const double bnorm = b.norm();
  KrylovResult out;
  out.x = Vector::Zero(b.size());
  if (bnorm == 0.0) {
    out.converged = true;
    out.history.push_back(0.0);
    return out;
  }

  Vector r = b;
  Vector z = apply_m(r);
  Vector p = z;
  double rz = r.dot(z);
  out.history.push_back(r.norm() / bnorm);

  for (int it = 1; it <= opts.max_iters; ++it) {
    Vector ap = apply_a(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0) || !std::isfinite(pap)) {
      throw BreakdownError("conjugate gradient encountered a non-positive "
                           "curvature direction",
                           it);
    }
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    out.iterations = it;
    out.history.push_back(r.norm() / bnorm);
    if (out.history.back() <= opts.tol) {
      // Confirm with the true residual (recursion drift guard).
      const double true_rel = (b - apply_a(out.x)).norm() / bnorm;
      out.history.back() = true_rel;
      if (true_rel <= opts.tol) {
        out.converged = true;
        return out;
      }
      r = b - apply_a(out.x);
    }
    z = apply_m(r);
    const double rz_next = r.dot(z);
    if (!std::isfinite(rz_next)) {
      throw BreakdownError("conjugate gradient preconditioned inner product "
                           "is not finite",
                           it);
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    p = z + beta * p;
  }
  return out;
}

KrylovResult gmres(const LinearOperator& apply_a, const LinearOperator& apply_m,
                   const Vector& b, const KrylovOptions& opts) {
  opts.validate();
  const double bnorm = b.norm();
  KrylovResult out;
  out.x = Vector::Zero(b.size());
  if (bnorm == 0.0) {
    out.converged = true;
    out.history.push_back(0.0);
    return out;
  }
  const Vector mb = apply_m(b);
  const double mbnorm = mb.norm();
  if (!(mbnorm > 0.0) || !std::isfinite(mbnorm)) {
    throw BreakdownError("preconditioned right-hand side vanished", 0);
  }

  const int m = opts.restart;
  std::vector<Vector> v(m + 1);
  Matrix hess = Matrix::Zero(m + 1, m);
  Vector cs = Vector::Zero(m), sn = Vector::Zero(m), g = Vector::Zero(m + 1);

  out.history.push_back(1.0);
  int total = 0;
  while (total < opts.max_iters) {
    Vector r = apply_m(b - apply_a(out.x));
    double beta = r.norm();
    if (beta == 0.0) {
      out.converged = true;
      return out;
    }
    v[0] = r / beta;
    g.setZero();
    g(0) = beta;

    int j = 0;
    bool happy = false;
    for (; j < m && total < opts.max_iters; ++j, ++total) {
      Vector w = apply_m(apply_a(v[j]));
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = w.dot(v[i]);
        w -= hess(i, j) * v[i];
      }
      hess(j + 1, j) = w.norm();
      const bool lucky = hess(j + 1, j) == 0.0;
      if (!lucky) {
        v[j + 1] = w / hess(j + 1, j);
      }

      // Apply accumulated Givens rotations, then form a new one.
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * hess(i, j) + sn(i) * hess(i + 1, j);
        hess(i + 1, j) = -sn(i) * hess(i, j) + cs(i) * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double denom = std::hypot(hess(j, j), hess(j + 1, j));
      if (denom == 0.0) {
        throw BreakdownError("gmres produced a zero Hessenberg column",
                             total + 1);
      }
      cs(j) = hess(j, j) / denom;
      sn(j) = hess(j + 1, j) / denom;
      hess(j, j) = denom;
      hess(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);

      out.iterations = total + 1;
      out.history.push_back(std::abs(g(j + 1)) / mbnorm);
      if (out.history.back() <= opts.tol || lucky) {
        ++j;
        ++total;
        happy = true;
        break;
      }
    }

    // Solve the least-squares problem and update the iterate.
    Vector y = Vector::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g(i);
      for (int k = i + 1; k < j; ++k) s -= hess(i, k) * y(k);
      y(i) = s / hess(i, i);
    }
    for (int i = 0; i < j; ++i) out.x += y(i) * v[i];

    const double true_rel = (b - apply_a(out.x)).norm() / bnorm;
    if (true_rel <= opts.tol) {
      out.converged = true;
      return out;
    }
    if (happy && out.history.back() <= opts.tol) {
      // Preconditioned residual converged but the true one did not; keep
      // iterating from the current iterate.
      continue;
    }
  }
  return out;
}

}  // namespace acr
