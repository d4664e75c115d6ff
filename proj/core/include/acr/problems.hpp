#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "acr/hmatrix.hpp"

namespace acr {

/// Structured grid of interior nodes of the unit cube under homogeneous
/// Dirichlet conditions: n points per dimension, spacing h = 1/(n+1).
/// Lexicographic ordering grouped by planes of fixed third coordinate:
/// idx = k*n*n + j*n + i with coordinates ((i+1)h, (j+1)h, (k+1)h).
struct Grid3D {
  int n = 2;

  double h() const { return 1.0 / (n + 1); }
  std::int64_t num_nodes() const {
    return static_cast<std::int64_t>(n) * n * n;
  }
  int plane_size() const { return n * n; }
  std::int64_t index(int i, int j, int k) const {
    return (static_cast<std::int64_t>(k) * n + j) * n + i;
  }
  Eigen::Vector3d coord(int i, int j, int k) const {
    return {(i + 1) * h(), (j + 1) * h(), (k + 1) * h()};
  }
  /// 2D coordinates of one plane's nodes, in-plane ordering i + j*n.
  std::vector<Eigen::Vector2d> plane_coords() const;
};

enum class FieldKind : std::int32_t { Permeability = 0, Velocity = 1 };

/// Per-node scalar coefficient samples on a structured grid.
struct CoefficientField {
  Grid3D grid;
  Vector values;  // size n^3, strictly positive for kappa/c fields
  FieldKind kind = FieldKind::Permeability;
  std::uint64_t seed = 0;
  double contrast_orders = 0.0;
};

/// Block-tridiagonal system with one block row per plane. The initial PDE
/// discretizations have sparse diagonal blocks and *diagonal* off-diagonal
/// blocks, which the types below encode directly.
struct BlockTridiagonalSystem {
  int nrows = 0;   ///< number of block rows (planes)
  int block = 0;   ///< block size (n^2 for a grid problem)
  std::vector<SparseMatrix> diag;  ///< nrows diagonal blocks
  std::vector<Vector> sub;         ///< sub[k] = diagonal of L_{k+1} (row k+1 -> k)
  std::vector<Vector> sup;         ///< sup[k] = diagonal of U_k (row k -> k+1)
  Vector rhs;
  bool symmetric = false;
  std::vector<Eigen::Vector2d> plane_points;  ///< plane geometry for clustering

  std::int64_t size() const {
    return static_cast<std::int64_t>(nrows) * block;
  }
  Vector matvec(const Vector& x) const;
  SparseMatrix to_sparse() const;
  Matrix to_dense() const;
};

/// 2 k1 k2 / (k1 + k2); both arguments must be positive.
double harmonic_mean(double k1, double k2);

/// 7-point finite differences for -div(kappa grad u) = 1 with harmonic face
/// averaging and eliminated Dirichlet boundary.
BlockTridiagonalSystem poisson_system(const Grid3D& grid,
                                      const CoefficientField& kappa);

/// Divergence-free recirculating flow with a x a x a vortex cells.
Eigen::Vector3d flow_eval(const Eigen::Vector3d& x, double a);

/// Poisson diffusion plus first-order upwind convection alpha * b . grad u.
BlockTridiagonalSystem convdiff_system(const Grid3D& grid,
                                       const CoefficientField& kappa,
                                       double alpha, double a);

/// Waveguide wave speed, independent of z.
double velocity_eval(const Eigen::Vector3d& x);

/// Minimum of the waveguide velocity over the domain (attained on the axis).
inline constexpr double kWaveguideMinVelocity = 0.75;

/// 7-point Helmholtz operator -lap u - (2 pi f)^2 / c^2 u with the forcing
/// chosen so that u = sin(pi x) sin(pi y) sin(pi z) solves the continuum
/// equation.
BlockTridiagonalSystem helmholtz_system(const Grid3D& grid, double freq);

/// Nodal samples of the manufactured solution.
Vector manufactured_solution(const Grid3D& grid);

/// Grid resolution of a Helmholtz wave: c_min / (f h).
double points_per_wavelength(const Grid3D& grid, double freq);

/// Log-normal coefficient field kappa = exp(Z) where Z is a stationary
/// Gaussian field with covariance exp(-|h|_2 / lambda), rescaled so that
/// log10(max kappa / min kappa) equals contrast_orders exactly.
/// Deterministic per seed. contrast_orders == 0 yields kappa == 1.
CoefficientField gaussian_random_field(const Grid3D& grid, double lambda,
                                       double contrast_orders,
                                       std::uint64_t seed);

/// Flat binary field files: small header (n, kind, seed, contrast) followed
/// by n^3 little-endian doubles.
void write_field(const CoefficientField& field, const std::string& path);
CoefficientField read_field(const std::string& path);

/// MatrixMarket coordinate export of the assembled system.
void write_matrix_market(const BlockTridiagonalSystem& sys,
                         const std::string& path);

}  // namespace acr
