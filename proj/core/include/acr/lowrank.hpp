#pragma once

#include <Eigen/Dense>

namespace acr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rank-k factored block, approximating a rows x cols matrix as U * V^T.
/// U is rows x k with singular values absorbed, V is cols x k.
struct LowRankBlock {
  Matrix U;
  Matrix V;

  Eigen::Index rows() const { return U.rows(); }
  Eigen::Index cols() const { return V.rows(); }
  Eigen::Index rank() const { return U.cols(); }

  Matrix dense() const { return U * V.transpose(); }

  static LowRankBlock zero(Eigen::Index rows, Eigen::Index cols) {
    return {Matrix(rows, 0), Matrix(cols, 0)};
  }
};

/// Rank-revealing truncation of a dense block.
///
/// Keeps the smallest rank k such that the Frobenius tail of the discarded
/// singular values satisfies (sum_{i>k} s_i^2)^{1/2} <= eps * |A|_F.
/// eps == 0 keeps the exact numerical rank (only zero singular values, up to
/// machine roundoff, are dropped).
LowRankBlock truncated_svd(const Matrix& a, double eps);

/// Re-truncates the stacked factor pair (U, V), representing U V^T, to the
/// relative tolerance eps via two thin QRs and a small SVD.
LowRankBlock truncate_factors(const Matrix& u, const Matrix& v, double eps);

/// Sum of two factored blocks, re-truncated so that
/// |(B1 + B2) - result|_F <= eps * |B1 + B2|_F.
LowRankBlock recompress_sum(const LowRankBlock& b1, const LowRankBlock& b2,
                            double eps);

}  // namespace acr
