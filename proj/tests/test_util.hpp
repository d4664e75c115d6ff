#pragma once

// Shared helpers for the unit and acceptance tests.

#include <memory>
#include <random>
#include <vector>

#include "acr/cluster.hpp"
#include "acr/hmatrix.hpp"
#include "acr/problems.hpp"

namespace acr::testing {

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = dist(rng);
  return a;
}

inline Vector random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

inline std::vector<Eigen::Vector2d> line_points(int n) {
  std::vector<Eigen::Vector2d> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = {double(i), 0.0};
  return pts;
}

inline std::vector<Eigen::Vector2d> grid_points(int n) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(std::size_t(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pts.push_back({double(i), double(j)});
  return pts;
}

inline std::shared_ptr<const BlockTree> line_structure(int n,
                                                       const HOptions& opts) {
  auto tree = std::make_shared<const ClusterTree>(
      build_cluster_tree(line_points(n), opts.n_min));
  return build_block_tree(tree, tree, opts);
}

inline std::shared_ptr<const BlockTree> grid_structure(int n,
                                                       const HOptions& opts) {
  auto tree = std::make_shared<const ClusterTree>(
      build_cluster_tree(grid_points(n), opts.n_min));
  return build_block_tree(tree, tree, opts);
}

/// Natural-ordering dense matrix rearranged into the tree ordering of the
/// given structure, comparable against densify().
inline Matrix to_tree_ordering(const Matrix& a, const BlockTree& structure) {
  const auto& rp = structure.row_tree->perm;
  const auto& cp = structure.col_tree->perm;
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, j) = a(rp[i], cp[j]);
  return out;
}

/// 5-point Laplacian of an n x n plane with unit spacing, natural ordering.
inline SparseMatrix plane_laplacian(int n, double shift = 0.0) {
  const int m = n * n;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(m) * 5);
  auto idx = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      trips.emplace_back(idx(i, j), idx(i, j), 4.0 + shift);
      if (i > 0) trips.emplace_back(idx(i, j), idx(i - 1, j), -1.0);
      if (i + 1 < n) trips.emplace_back(idx(i, j), idx(i + 1, j), -1.0);
      if (j > 0) trips.emplace_back(idx(i, j), idx(i, j - 1), -1.0);
      if (j + 1 < n) trips.emplace_back(idx(i, j), idx(i, j + 1), -1.0);
    }
  }
  SparseMatrix a(m, m);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

/// 3D constant-coefficient Poisson on an nx x nx x nrows grid assembled
/// directly as a block-tridiagonal system (plane size nx^2, unit kappa).
inline BlockTridiagonalSystem stacked_plane_system(int nx, int nrows) {
  const double h = 1.0 / (nx + 1);
  const double s = 1.0 / (h * h);
  BlockTridiagonalSystem sys;
  sys.nrows = nrows;
  sys.block = nx * nx;
  sys.symmetric = true;
  SparseMatrix d = plane_laplacian(nx, 2.0);
  d *= s;
  sys.diag.assign(nrows, d);
  sys.sub.assign(nrows - 1, Vector::Constant(sys.block, -s));
  sys.sup.assign(nrows - 1, Vector::Constant(sys.block, -s));
  sys.rhs = Vector::Ones(std::int64_t(nrows) * sys.block);
  sys.plane_points = grid_points(nx);
  return sys;
}

/// Scalar (1x1 blocks) tridiagonal system.
inline BlockTridiagonalSystem scalar_tridiagonal(const Vector& d,
                                                 const Vector& lo,
                                                 const Vector& up) {
  BlockTridiagonalSystem sys;
  sys.nrows = static_cast<int>(d.size());
  sys.block = 1;
  sys.symmetric = true;
  for (int i = 0; i < sys.nrows; ++i) {
    SparseMatrix m(1, 1);
    m.insert(0, 0) = d(i);
    sys.diag.push_back(m);
  }
  for (int i = 0; i + 1 < sys.nrows; ++i) {
    sys.sub.push_back(Vector::Constant(1, lo(i)));
    sys.sup.push_back(Vector::Constant(1, up(i)));
  }
  sys.rhs = Vector::Ones(sys.nrows);
  return sys;
}

}  // namespace acr::testing
