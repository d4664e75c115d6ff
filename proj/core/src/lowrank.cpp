#include "acr/lowrank.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "acr/errors.hpp"

namespace acr {

namespace {

// Smallest k with sqrt(sum_{i>k} s_i^2) <= eps * |A|_F. For eps == 0 only
// singular values at roundoff level relative to s_0 are dropped.
Eigen::Index tail_rank(const Vector& sigma, double eps, Eigen::Index max_dim) {
  const Eigen::Index m = sigma.size();
  if (m == 0 || sigma(0) <= 0.0) return 0;
  if (eps <= 0.0) {
    const double floor = sigma(0) * std::numeric_limits<double>::epsilon() *
                         static_cast<double>(std::max<Eigen::Index>(max_dim, 1));
    Eigen::Index k = m;
    while (k > 0 && sigma(k - 1) <= floor) --k;
    return k;
  }
  const double target = eps * eps * sigma.squaredNorm();
  double tail = 0.0;
  Eigen::Index k = m;
  while (k > 0) {
    const double next = tail + sigma(k - 1) * sigma(k - 1);
    if (next > target) break;
    tail = next;
    --k;
  }
  return k;
}

struct ThinSvd {
  Matrix u;
  Vector sigma;
  Matrix v;
};

// BDCSVD occasionally emits non-finite or inaccurate factorizations on small
// structured inputs; verify the reconstruction and fall back to the slower but
// robust one-sided Jacobi algorithm when it is off.
ThinSvd robust_svd(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().allFinite() && svd.matrixU().allFinite() &&
      svd.matrixV().allFinite()) {
    // Verify the factorization on a fixed probe vector; a full reconstruction
    // would cost as much as the decomposition itself.
    Vector w(a.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w(i) = std::cos(static_cast<double>(i) + 1.0);
    const Vector residual =
        svd.matrixU() *
            (svd.singularValues().asDiagonal() * (svd.matrixV().transpose() * w)) -
        a * w;
    if (residual.norm() <= 1e-12 * a.norm() * w.norm() + 1e-300)
      return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
  }
  Eigen::JacobiSVD<Matrix> jac(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {jac.matrixU(), jac.singularValues(), jac.matrixV()};
}

Matrix thin_q(const Eigen::HouseholderQR<Matrix>& qr, Eigen::Index r) {
  Matrix q = Matrix::Identity(qr.matrixQR().rows(), r);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

}  // namespace

LowRankBlock truncated_svd(const Matrix& a, double eps) {
  if (a.size() == 0) throw InvalidInputError("truncated_svd: empty block");
  if (!a.allFinite())
    throw InvalidInputError("truncated_svd: non-finite entries in input");
  if (eps < 0.0) throw InvalidInputError("truncated_svd: negative tolerance");

  const ThinSvd svd = robust_svd(a);
  const Vector& sigma = svd.sigma;
  const Eigen::Index k = tail_rank(sigma, eps, std::max(a.rows(), a.cols()));

  LowRankBlock out;
  out.U = svd.u.leftCols(k) * sigma.head(k).asDiagonal();
  out.V = svd.v.leftCols(k);
  return out;
}

LowRankBlock truncate_factors(const Matrix& u, const Matrix& v, double eps) {
  if (u.cols() != v.cols())
    throw ShapeMismatchError("truncate_factors: factor rank mismatch");
  const Eigen::Index k = u.cols();
  if (k == 0) return LowRankBlock::zero(u.rows(), v.rows());

  const Eigen::Index ru = std::min(u.rows(), k);
  const Eigen::Index rv = std::min(v.rows(), k);
  Eigen::HouseholderQR<Matrix> qru(u);
  Eigen::HouseholderQR<Matrix> qrv(v);
  Matrix r_u = Matrix::Zero(ru, k);
  r_u = qru.matrixQR().topRows(ru).triangularView<Eigen::Upper>();
  Matrix r_v = Matrix::Zero(rv, k);
  r_v = qrv.matrixQR().topRows(rv).triangularView<Eigen::Upper>();
  const Matrix core = r_u * r_v.transpose();

  const ThinSvd svd = robust_svd(core);
  const Vector& sigma = svd.sigma;
  Eigen::Index r = tail_rank(sigma, eps, std::max(u.rows(), v.rows()));
  // Cancellation guard: singular values at roundoff level relative to the
  // *inputs* are numerical noise even when the represented sum is tiny.
  const double noise = std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(u.rows(), v.rows())) *
                       u.norm() * v.norm();
  while (r > 0 && sigma(r - 1) <= noise) --r;

  LowRankBlock out;
  out.U = thin_q(qru, ru) * (svd.u.leftCols(r) * sigma.head(r).asDiagonal());
  out.V = thin_q(qrv, rv) * svd.v.leftCols(r);
  return out;
}

LowRankBlock recompress_sum(const LowRankBlock& b1, const LowRankBlock& b2,
                            double eps) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw ShapeMismatchError("recompress_sum: shape mismatch");
  if (b1.rank() == 0) return b2;
  if (b2.rank() == 0) return b1;

  Matrix u(b1.rows(), b1.rank() + b2.rank());
  u << b1.U, b2.U;
  Matrix v(b1.cols(), b1.rank() + b2.rank());
  v << b1.V, b2.V;
  return truncate_factors(u, v, eps);
}

}  // namespace acr
