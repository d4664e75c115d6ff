#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <functional>
#include <iosfwd>
#include <memory>

#include "acr/cluster.hpp"
#include "acr/lowrank.hpp"

namespace acr {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Construction options of the hierarchical format.
struct HOptions {
  double epsilon = 1e-4;  ///< block-wise relative truncation accuracy
  double eta = 2.0;       ///< admissibility weight; kWeakAdmissibility for weak
  int n_min = 32;         ///< leaf size threshold

  static HOptions weak(double epsilon, int n_min = 32) {
    return {epsilon, kWeakAdmissibility, n_min};
  }
  void validate() const;
};

enum class BlockKind { Subdivided, LowRank, Dense };

/// Skeleton node of the block cluster tree: a (row cluster, col cluster) pair
/// plus the decision taken for it. Subdivided nodes always have 4 children in
/// row-major order (both clusters split in two).
struct BlockNode {
  int row_cluster = 0;
  int col_cluster = 0;
  int row_lo = 0, row_hi = 0;
  int col_lo = 0, col_hi = 0;
  BlockKind kind = BlockKind::Dense;
  std::array<std::unique_ptr<BlockNode>, 4> child;

  int rows() const { return row_hi - row_lo; }
  int cols() const { return col_hi - col_lo; }
  const BlockNode& sub(int i, int j) const { return *child[2 * i + j]; }
};

/// Block cluster tree for a (row tree, col tree) pair under an admissibility
/// condition. Immutable once built; shared by every H-matrix with the same
/// geometry and options.
struct BlockTree {
  std::unique_ptr<BlockNode> root;
  std::shared_ptr<const ClusterTree> row_tree;
  std::shared_ptr<const ClusterTree> col_tree;
  HOptions opts;

  int low_rank_leaves() const;
  int dense_leaves() const;
};

std::shared_ptr<const BlockTree> build_block_tree(
    std::shared_ptr<const ClusterTree> row_tree,
    std::shared_ptr<const ClusterTree> col_tree, const HOptions& opts);

struct RankStats {
  int max_rank = 0;
  double avg_rank = 0.0;
  int low_rank_leaves = 0;
};

/// Hierarchical matrix over a shared block cluster tree. Leaf payloads are
/// dense or factored blocks; indices live in the tree (permuted) ordering.
class HMatrix {
public:
  struct Node {
    const BlockNode* skel = nullptr;
    Matrix dense;     // BlockKind::Dense payload
    LowRankBlock lr;  // BlockKind::LowRank payload
    std::array<std::unique_ptr<Node>, 4> child;

    BlockKind kind() const { return skel->kind; }
    Node& sub(int i, int j) { return *child[2 * i + j]; }
    const Node& sub(int i, int j) const { return *child[2 * i + j]; }
  };

  HMatrix() = default;
  HMatrix(HMatrix&&) = default;
  HMatrix& operator=(HMatrix&&) = default;

  bool empty() const { return !root_; }
  int rows() const;
  int cols() const;
  const HOptions& options() const { return structure_->opts; }
  const ClusterTree& row_tree() const { return *structure_->row_tree; }
  const ClusterTree& col_tree() const { return *structure_->col_tree; }
  std::shared_ptr<const BlockTree> structure() const { return structure_; }

  HMatrix clone() const;

  Node& root() { return *root_; }
  const Node& root() const { return *root_; }

private:
  friend HMatrix make_hmatrix(std::shared_ptr<const BlockTree>,
                              std::unique_ptr<Node>);
  std::shared_ptr<const BlockTree> structure_;
  std::unique_ptr<Node> root_;
};

/// Zero H-matrix with the given structure.
HMatrix h_zero(std::shared_ptr<const BlockTree> structure);

/// Identity (requires a square structure).
HMatrix h_identity(std::shared_ptr<const BlockTree> structure);

/// Fills the structure from an entry oracle given in natural (pre-permutation)
/// indices. Dense leaves are exact; admissible leaves are materialized and
/// truncated at opts.epsilon.
HMatrix assemble(const std::function<double(int, int)>& entry,
                 std::shared_ptr<const BlockTree> structure);

/// Same, from a sparse matrix in natural ordering. Low-rank leaves are
/// compressed from their nonzero columns only.
HMatrix assemble_sparse(const SparseMatrix& a,
                        std::shared_ptr<const BlockTree> structure);

/// y = H x, with x and y in tree ordering. Exact w.r.t. the representation.
Vector h_matvec(const HMatrix& h, const Vector& x);
Vector h_matvec_transpose(const HMatrix& h, const Vector& x);

/// Structure-preserving truncated sum / product / inverse. All operands must
/// share the same block tree.
HMatrix h_add(const HMatrix& a, const HMatrix& b, double eps);
HMatrix h_mul(const HMatrix& a, const HMatrix& b, double eps);
HMatrix h_invert(const HMatrix& a, double eps);

/// In-place truncated y += alpha * x (same structure).
void h_axpy(HMatrix& y, const HMatrix& x, double alpha, double eps);

/// In-place row/column scaling by a diagonal given in tree ordering.
void h_scale_rows(HMatrix& h, const Vector& d);
void h_scale_cols(HMatrix& h, const Vector& d);

/// Storage accounting: 8*m*n bytes per dense leaf, 8*k*(m+n) per factored
/// leaf.
std::size_t footprint(const HMatrix& h);
RankStats rank_stats(const HMatrix& h);

Matrix densify(const HMatrix& h);
double h_fnorm(const HMatrix& h);

/// One CSV record per leaf: row_lo,row_hi,col_lo,col_hi,kind,rank.
void dump_structure_csv(const HMatrix& h, std::ostream& os);

}  // namespace acr
