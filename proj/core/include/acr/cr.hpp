#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

#include "acr/hmatrix.hpp"
#include "acr/problems.hpp"

namespace acr {

/// Off-diagonal coupling of one block row to a neighbor. The initial plane
/// couplings of the PDE stencils are diagonal matrices and are kept as plain
/// diagonals; couplings created by elimination are hierarchical.
/// monostate marks an absent (out-of-range) coupling.
using Coupling = std::variant<std::monostate, Vector, HMatrix>;

inline bool has_coupling(const Coupling& c) {
  return !std::holds_alternative<std::monostate>(c);
}

/// y += alpha * C x for a coupling block.
void apply_coupling(const Coupling& c, const Vector& x, double alpha,
                    Vector& y);

struct LevelStats {
  int level = 0;
  int rows_eliminated = 0;
  int rows_remaining = 0;
  int max_rank = 0;
  double avg_rank = 0.0;
  std::int64_t low_rank_leaves = 0;
  std::size_t bytes = 0;
  double seconds = 0.0;
};

struct SolveStats {
  std::vector<LevelStats> levels;
  std::size_t total_bytes = 0;
  double setup_seconds = 0.0;
};

/// Cyclic reduction factorization of a block-tridiagonal system with every
/// block stored hierarchically. Setup eliminates alternate block rows level by
/// level; apply replays the elimination on a right-hand side (forward pass),
/// solves the final rows, and back-substitutes. Red rows are the odd 1-based
/// positions of each level's surviving sequence.
class ACRPreconditioner {
public:
  /// One eliminated (red) row: its approximate inverse and the coupling
  /// blocks to its neighbors, frozen at elimination time.
  struct EliminatedRow {
    int row = 0;
    int left = -1;   ///< surviving left neighbor at this level, -1 if none
    int right = -1;  ///< surviving right neighbor, -1 if none
    HMatrix inv;
    Coupling lower;  ///< coupling to `left`
    Coupling upper;  ///< coupling to `right`
  };

  /// One surviving (black) row's couplings to its red neighbors, frozen
  /// before the level update rewrote them.
  struct SurvivorEdge {
    int row = 0;
    int left = -1;
    int right = -1;
    Coupling lower;
    Coupling upper;
  };

  struct Level {
    std::vector<EliminatedRow> red;
    std::vector<SurvivorEdge> black;
  };

  /// Optional dense solve of the rows left when reduction stops early.
  struct CoarseSolve {
    std::vector<int> rows;
    Eigen::PartialPivLU<Matrix> lu;
  };

  int nrows = 0;
  int block = 0;
  HOptions opts;
  std::shared_ptr<const ClusterTree> plane_tree;
  std::shared_ptr<const BlockTree> structure;
  std::vector<Level> levels;
  CoarseSolve coarse;  ///< empty rows when reduction ran to completion
  SolveStats stats;

  std::int64_t size() const {
    return static_cast<std::int64_t>(nrows) * block;
  }
  int num_levels() const { return static_cast<int>(levels.size()); }
  std::size_t footprint_bytes() const { return stats.total_bytes; }

  /// Approximate solve: forward substitution through the levels, coarse
  /// solve, backward substitution. Input and output in natural ordering.
  Vector apply(const Vector& f) const;

  /// Per-level CSV: level,rows_remaining,max_rank,avg_rank,bytes,seconds.
  void dump_level_csv(std::ostream& os) const;
};

/// Factors the system. coarse_threshold <= 1 reduces to a single block row;
/// larger values stop early and solve the remaining rows densely.
ACRPreconditioner acr_setup(const BlockTridiagonalSystem& sys,
                            const HOptions& opts, int coarse_threshold = 1);

Vector acr_apply(const ACRPreconditioner& p, const Vector& f);

/// Classical block cyclic reduction with exact dense blocks; the reference
/// the hierarchical path is tested against.
Vector exact_cr_solve(const BlockTridiagonalSystem& sys, const Vector& f);

}  // namespace acr
