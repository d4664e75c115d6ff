#include "acr/hmatrix.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <ostream>

#include "acr/errors.hpp"

namespace acr {

void HOptions::validate() const {
  if (epsilon < 0.0) throw InvalidInputError("HOptions: epsilon < 0");
  if (n_min < 1) throw InvalidInputError("HOptions: n_min < 1");
  if (!(eta >= 0.0)) throw InvalidInputError("HOptions: eta < 0");
}

namespace {

std::unique_ptr<BlockNode> build_block_node(const ClusterTree& rt,
                                            const ClusterTree& ct, int rc,
                                            int cc, const HOptions& opts) {
  auto node = std::make_unique<BlockNode>();
  const ClusterNode& tau = rt.nodes[rc];
  const ClusterNode& sigma = ct.nodes[cc];
  node->row_cluster = rc;
  node->col_cluster = cc;
  node->row_lo = tau.lo;
  node->row_hi = tau.hi;
  node->col_lo = sigma.lo;
  node->col_hi = sigma.hi;

  if (is_admissible(tau, sigma, opts.eta)) {
    node->kind = BlockKind::LowRank;
  } else if (tau.is_leaf() || sigma.is_leaf()) {
    node->kind = BlockKind::Dense;
  } else {
    node->kind = BlockKind::Subdivided;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        node->child[2 * i + j] = build_block_node(
            rt, ct, tau.child[i], sigma.child[j], opts);
  }
  return node;
}

}  // namespace

std::shared_ptr<const BlockTree> build_block_tree(
    std::shared_ptr<const ClusterTree> row_tree,
    std::shared_ptr<const ClusterTree> col_tree, const HOptions& opts) {
  opts.validate();
  if (row_tree->n_min != col_tree->n_min)
    throw ShapeMismatchError("build_block_tree: trees built with different n_min");
  auto tree = std::make_shared<BlockTree>();
  tree->row_tree = row_tree;
  tree->col_tree = col_tree;
  tree->opts = opts;
  tree->root = build_block_node(*row_tree, *col_tree, 0, 0, opts);
  return tree;
}

namespace {

template <typename F>
void for_each_leaf(const BlockNode& node, F&& f) {
  if (node.kind == BlockKind::Subdivided) {
    for (const auto& c : node.child) for_each_leaf(*c, f);
  } else {
    f(node);
  }
}

}  // namespace

int BlockTree::low_rank_leaves() const {
  int n = 0;
  for_each_leaf(*root, [&](const BlockNode& b) {
    if (b.kind == BlockKind::LowRank) ++n;
  });
  return n;
}

int BlockTree::dense_leaves() const {
  int n = 0;
  for_each_leaf(*root, [&](const BlockNode& b) {
    if (b.kind == BlockKind::Dense) ++n;
  });
  return n;
}

// ---------------------------------------------------------------------------
// Node-level arithmetic. All functions below operate on payload trees that
// mirror a shared immutable skeleton.
// ---------------------------------------------------------------------------

namespace {

using Node = HMatrix::Node;

std::unique_ptr<Node> zero_node(const BlockNode* skel) {
  auto n = std::make_unique<Node>();
  n->skel = skel;
  switch (skel->kind) {
    case BlockKind::Dense:
      n->dense = Matrix::Zero(skel->rows(), skel->cols());
      break;
    case BlockKind::LowRank:
      n->lr = LowRankBlock::zero(skel->rows(), skel->cols());
      break;
    case BlockKind::Subdivided:
      for (int c = 0; c < 4; ++c)
        n->child[c] = zero_node(skel->child[c].get());
      break;
  }
  return n;
}

std::unique_ptr<Node> clone_node(const Node& a) {
  auto n = std::make_unique<Node>();
  n->skel = a.skel;
  n->dense = a.dense;
  n->lr = a.lr;
  if (a.skel->kind == BlockKind::Subdivided)
    for (int c = 0; c < 4; ++c) n->child[c] = clone_node(*a.child[c]);
  return n;
}

void apply_add(const Node& a, Eigen::Ref<const Matrix> x,
               Eigen::Ref<Matrix> y, double alpha) {
  switch (a.kind()) {
    case BlockKind::Dense:
      y.noalias() += alpha * (a.dense * x);
      break;
    case BlockKind::LowRank:
      if (a.lr.rank() > 0)
        y.noalias() += alpha * (a.lr.U * (a.lr.V.transpose() * x));
      break;
    case BlockKind::Subdivided: {
      const int r0 = a.skel->sub(0, 0).rows();
      const int c0 = a.skel->sub(0, 0).cols();
      const int r1 = a.skel->rows() - r0;
      const int c1 = a.skel->cols() - c0;
      apply_add(a.sub(0, 0), x.topRows(c0), y.topRows(r0), alpha);
      apply_add(a.sub(0, 1), x.bottomRows(c1), y.topRows(r0), alpha);
      apply_add(a.sub(1, 0), x.topRows(c0), y.bottomRows(r1), alpha);
      apply_add(a.sub(1, 1), x.bottomRows(c1), y.bottomRows(r1), alpha);
      break;
    }
  }
}

void apply_transpose_add(const Node& a, Eigen::Ref<const Matrix> x,
                         Eigen::Ref<Matrix> y, double alpha) {
  switch (a.kind()) {
    case BlockKind::Dense:
      y.noalias() += alpha * (a.dense.transpose() * x);
      break;
    case BlockKind::LowRank:
      if (a.lr.rank() > 0)
        y.noalias() += alpha * (a.lr.V * (a.lr.U.transpose() * x));
      break;
    case BlockKind::Subdivided: {
      const int r0 = a.skel->sub(0, 0).rows();
      const int c0 = a.skel->sub(0, 0).cols();
      const int r1 = a.skel->rows() - r0;
      const int c1 = a.skel->cols() - c0;
      apply_transpose_add(a.sub(0, 0), x.topRows(r0), y.topRows(c0), alpha);
      apply_transpose_add(a.sub(1, 0), x.bottomRows(r1), y.topRows(c0), alpha);
      apply_transpose_add(a.sub(0, 1), x.topRows(r0), y.bottomRows(c1), alpha);
      apply_transpose_add(a.sub(1, 1), x.bottomRows(r1), y.bottomRows(c1), alpha);
      break;
    }
  }
}

Matrix apply(const Node& a, const Matrix& x) {
  Matrix y = Matrix::Zero(a.skel->rows(), x.cols());
  apply_add(a, x, y, 1.0);
  return y;
}

Matrix apply_transpose(const Node& a, const Matrix& x) {
  Matrix y = Matrix::Zero(a.skel->cols(), x.cols());
  apply_transpose_add(a, x, y, 1.0);
  return y;
}

Matrix densify_node(const Node& a) {
  switch (a.kind()) {
    case BlockKind::Dense:
      return a.dense;
    case BlockKind::LowRank:
      return a.lr.dense();
    default: {
      Matrix d(a.skel->rows(), a.skel->cols());
      const int r0 = a.skel->sub(0, 0).rows();
      const int c0 = a.skel->sub(0, 0).cols();
      d.topLeftCorner(r0, c0) = densify_node(a.sub(0, 0));
      d.topRightCorner(r0, d.cols() - c0) = densify_node(a.sub(0, 1));
      d.bottomLeftCorner(d.rows() - r0, c0) = densify_node(a.sub(1, 0));
      d.bottomRightCorner(d.rows() - r0, d.cols() - c0) =
          densify_node(a.sub(1, 1));
      return d;
    }
  }
}

// Low-rank view of an arbitrary node; subdivided nodes are agglomerated from
// their children and re-truncated once.
LowRankBlock node_to_lowrank(const Node& a, double eps) {
  switch (a.kind()) {
    case BlockKind::LowRank:
      return a.lr;
    case BlockKind::Dense:
      return truncated_svd(a.dense, eps);
    default: {
      LowRankBlock c00 = node_to_lowrank(a.sub(0, 0), eps);
      LowRankBlock c01 = node_to_lowrank(a.sub(0, 1), eps);
      LowRankBlock c10 = node_to_lowrank(a.sub(1, 0), eps);
      LowRankBlock c11 = node_to_lowrank(a.sub(1, 1), eps);
      const int m = a.skel->rows(), n = a.skel->cols();
      const int r0 = a.skel->sub(0, 0).rows();
      const int c0 = a.skel->sub(0, 0).cols();
      const Eigen::Index k =
          c00.rank() + c01.rank() + c10.rank() + c11.rank();
      Matrix u = Matrix::Zero(m, k);
      Matrix v = Matrix::Zero(n, k);
      Eigen::Index at = 0;
      auto put = [&](const LowRankBlock& b, int roff, int coff) {
        u.block(roff, at, b.rows(), b.rank()) = b.U;
        v.block(coff, at, b.cols(), b.rank()) = b.V;
        at += b.rank();
      };
      put(c00, 0, 0);
      put(c01, 0, c0);
      put(c10, r0, 0);
      put(c11, r0, c0);
      return truncate_factors(u, v, eps);
    }
  }
}

void add_lowrank(Node& c, const Matrix& u, const Matrix& v, double alpha,
                 double eps);

// c += alpha * X for a dense update matching the full node extent.
void add_dense(Node& c, const Matrix& x, double alpha, double eps) {
  switch (c.kind()) {
    case BlockKind::Dense:
      c.dense.noalias() += alpha * x;
      break;
    case BlockKind::LowRank: {
      // Keep the update in factored form; truncation happens in the sum.
      LowRankBlock r = truncated_svd(x, eps);
      if (r.rank() > 0) add_lowrank(c, r.U, r.V, alpha, eps);
      break;
    }
    case BlockKind::Subdivided: {
      const int r0 = c.skel->sub(0, 0).rows();
      const int c0 = c.skel->sub(0, 0).cols();
      add_dense(c.sub(0, 0), x.topLeftCorner(r0, c0), alpha, eps);
      add_dense(c.sub(0, 1), x.topRightCorner(r0, x.cols() - c0), alpha, eps);
      add_dense(c.sub(1, 0), x.bottomLeftCorner(x.rows() - r0, c0), alpha, eps);
      add_dense(c.sub(1, 1),
                x.bottomRightCorner(x.rows() - r0, x.cols() - c0), alpha, eps);
      break;
    }
  }
}

// c += alpha * U V^T.
void add_lowrank(Node& c, const Matrix& u, const Matrix& v, double alpha,
                 double eps) {
  if (u.cols() == 0) return;
  switch (c.kind()) {
    case BlockKind::Dense:
      c.dense.noalias() += alpha * (u * v.transpose());
      break;
    case BlockKind::LowRank:
      c.lr = recompress_sum(c.lr, {alpha * u, v}, eps);
      break;
    case BlockKind::Subdivided: {
      const int r0 = c.skel->sub(0, 0).rows();
      const int c0 = c.skel->sub(0, 0).cols();
      const Matrix u0 = u.topRows(r0), u1 = u.bottomRows(u.rows() - r0);
      const Matrix v0 = v.topRows(c0), v1 = v.bottomRows(v.rows() - c0);
      add_lowrank(c.sub(0, 0), u0, v0, alpha, eps);
      add_lowrank(c.sub(0, 1), u0, v1, alpha, eps);
      add_lowrank(c.sub(1, 0), u1, v0, alpha, eps);
      add_lowrank(c.sub(1, 1), u1, v1, alpha, eps);
      break;
    }
  }
}

// y += alpha * x, same skeleton.
void axpy_node(Node& y, const Node& x, double alpha, double eps) {
  switch (y.kind()) {
    case BlockKind::Dense:
      y.dense.noalias() += alpha * x.dense;
      break;
    case BlockKind::LowRank:
      y.lr = recompress_sum(y.lr, {alpha * x.lr.U, x.lr.V}, eps);
      break;
    case BlockKind::Subdivided:
      for (int c = 0; c < 4; ++c) axpy_node(*y.child[c], *x.child[c], alpha, eps);
      break;
  }
}

// c += alpha * a * b. The three nodes live on the same shared skeleton; the
// cluster pairs are (tau, rho), (rho, sigma) and (tau, sigma).
void multiply_add(Node& c, const Node& a, const Node& b, double alpha,
                  double eps) {
  const BlockKind ka = a.kind(), kb = b.kind();

  if (ka == BlockKind::LowRank) {
    if (a.lr.rank() == 0) return;
    const Matrix w = apply_transpose(b, a.lr.V);
    add_lowrank(c, a.lr.U, w, alpha, eps);
    return;
  }
  if (kb == BlockKind::LowRank) {
    if (b.lr.rank() == 0) return;
    const Matrix z = apply(a, b.lr.U);
    add_lowrank(c, z, b.lr.V, alpha, eps);
    return;
  }
  if (ka == BlockKind::Dense && kb == BlockKind::Dense) {
    const Eigen::Index q = a.dense.cols();
    if (c.kind() != BlockKind::Dense && q <= std::min(a.dense.rows(), b.dense.cols())) {
      const LowRankBlock t = truncate_factors(a.dense, b.dense.transpose(), eps);
      if (t.rank() > 0) add_lowrank(c, t.U, t.V, alpha, eps);
    } else {
      add_dense(c, a.dense * b.dense, alpha, eps);
    }
    return;
  }
  if (ka == BlockKind::Dense) {
    // tau is a leaf: the product has few rows.
    const Matrix p = apply_transpose(b, a.dense.transpose()).transpose();
    add_dense(c, p, alpha, eps);
    return;
  }
  if (kb == BlockKind::Dense) {
    // sigma is a leaf: the product has few columns.
    add_dense(c, apply(a, b.dense), alpha, eps);
    return;
  }

  // Both subdivided.
  if (c.kind() == BlockKind::Subdivided) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          multiply_add(c.sub(i, j), a.sub(i, k), b.sub(k, j), alpha, eps);
    return;
  }
  const LowRankBlock la = node_to_lowrank(a, eps);
  if (la.rank() == 0) return;
  const Matrix w = apply_transpose(b, la.V);
  add_lowrank(c, la.U, w, alpha, eps);
}

std::unique_ptr<Node> invert_node(const Node& a, double eps) {
  switch (a.kind()) {
    case BlockKind::Dense: {
      Eigen::PartialPivLU<Matrix> lu(a.dense);
      const Vector diag = lu.matrixLU().diagonal().cwiseAbs();
      const double dmax = diag.maxCoeff();
      const double tol = dmax * std::numeric_limits<double>::epsilon() *
                         static_cast<double>(a.dense.rows());
      if (dmax == 0.0 || diag.minCoeff() <= tol)
        throw SingularPivotError(
            "h_invert: singular dense pivot block, rows [" +
                std::to_string(a.skel->row_lo) + "," +
                std::to_string(a.skel->row_hi) + ")",
            -1, -1);
      auto n = std::make_unique<Node>();
      n->skel = a.skel;
      n->dense = lu.inverse();
      return n;
    }
    case BlockKind::LowRank:
      throw Error("h_invert: cannot invert a low-rank diagonal block");
    default: {
      auto inv00 = invert_node(a.sub(0, 0), eps);
      auto t01 = zero_node(a.skel->child[1].get());
      multiply_add(*t01, *inv00, a.sub(0, 1), 1.0, eps);
      auto t10 = zero_node(a.skel->child[2].get());
      multiply_add(*t10, a.sub(1, 0), *inv00, 1.0, eps);

      auto schur = clone_node(a.sub(1, 1));
      multiply_add(*schur, a.sub(1, 0), *t01, -1.0, eps);
      auto inv11 = invert_node(*schur, eps);

      auto x01 = zero_node(a.skel->child[1].get());
      multiply_add(*x01, *t01, *inv11, -1.0, eps);
      auto x10 = zero_node(a.skel->child[2].get());
      multiply_add(*x10, *inv11, *t10, -1.0, eps);
      auto x00 = std::move(inv00);
      multiply_add(*x00, *t01, *x10, -1.0, eps);

      auto n = std::make_unique<Node>();
      n->skel = a.skel;
      n->child[0] = std::move(x00);
      n->child[1] = std::move(x01);
      n->child[2] = std::move(x10);
      n->child[3] = std::move(inv11);
      return n;
    }
  }
}

void scale_rows_node(Node& a, Eigen::Ref<const Vector> d) {
  switch (a.kind()) {
    case BlockKind::Dense:
      a.dense = d.asDiagonal() * a.dense;
      break;
    case BlockKind::LowRank:
      a.lr.U = d.asDiagonal() * a.lr.U;
      break;
    case BlockKind::Subdivided: {
      const int r0 = a.skel->sub(0, 0).rows();
      scale_rows_node(a.sub(0, 0), d.head(r0));
      scale_rows_node(a.sub(0, 1), d.head(r0));
      scale_rows_node(a.sub(1, 0), d.tail(d.size() - r0));
      scale_rows_node(a.sub(1, 1), d.tail(d.size() - r0));
      break;
    }
  }
}

void scale_cols_node(Node& a, Eigen::Ref<const Vector> d) {
  switch (a.kind()) {
    case BlockKind::Dense:
      a.dense = a.dense * d.asDiagonal();
      break;
    case BlockKind::LowRank:
      a.lr.V = d.asDiagonal() * a.lr.V;
      break;
    case BlockKind::Subdivided: {
      const int c0 = a.skel->sub(0, 0).cols();
      scale_cols_node(a.sub(0, 0), d.head(c0));
      scale_cols_node(a.sub(1, 0), d.head(c0));
      scale_cols_node(a.sub(0, 1), d.tail(d.size() - c0));
      scale_cols_node(a.sub(1, 1), d.tail(d.size() - c0));
      break;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

HMatrix make_hmatrix(std::shared_ptr<const BlockTree> structure,
                     std::unique_ptr<Node> root) {
  HMatrix h;
  h.structure_ = std::move(structure);
  h.root_ = std::move(root);
  return h;
}

int HMatrix::rows() const { return structure_->root->rows(); }
int HMatrix::cols() const { return structure_->root->cols(); }

HMatrix HMatrix::clone() const {
  return make_hmatrix(structure_, clone_node(*root_));
}

HMatrix h_zero(std::shared_ptr<const BlockTree> structure) {
  auto root = zero_node(structure->root.get());
  return make_hmatrix(std::move(structure), std::move(root));
}

namespace {

void fill_identity(Node& a) {
  const bool diagonal = a.skel->row_cluster == a.skel->col_cluster;
  switch (a.kind()) {
    case BlockKind::Dense:
      if (diagonal) a.dense = Matrix::Identity(a.skel->rows(), a.skel->cols());
      break;
    case BlockKind::LowRank:
      break;  // off-diagonal: zero
    case BlockKind::Subdivided:
      if (diagonal) {
        fill_identity(a.sub(0, 0));
        fill_identity(a.sub(1, 1));
      }
      break;
  }
}

}  // namespace

HMatrix h_identity(std::shared_ptr<const BlockTree> structure) {
  if (structure->row_tree.get() != structure->col_tree.get())
    throw ShapeMismatchError("h_identity: structure is not square");
  HMatrix h = h_zero(std::move(structure));
  fill_identity(h.root());
  return h;
}

namespace {

void assemble_node(Node& a, const std::function<double(int, int)>& entry,
                   const std::vector<int>& rperm, const std::vector<int>& cperm,
                   double eps) {
  switch (a.kind()) {
    case BlockKind::Subdivided:
      for (int c = 0; c < 4; ++c)
        assemble_node(*a.child[c], entry, rperm, cperm, eps);
      break;
    default: {
      Matrix block(a.skel->rows(), a.skel->cols());
      for (int j = 0; j < a.skel->cols(); ++j)
        for (int i = 0; i < a.skel->rows(); ++i)
          block(i, j) =
              entry(rperm[a.skel->row_lo + i], cperm[a.skel->col_lo + j]);
      if (!block.allFinite())
        throw InvalidInputError("assemble: non-finite entry");
      if (a.kind() == BlockKind::Dense)
        a.dense = std::move(block);
      else
        a.lr = truncated_svd(block, eps);
      break;
    }
  }
}

void assemble_sparse_node(Node& a, const SparseMatrix& m,
                          const std::vector<int>& cperm,
                          const std::vector<int>& riperm, double eps) {
  const int row_lo = a.skel->row_lo, row_hi = a.skel->row_hi;
  switch (a.kind()) {
    case BlockKind::Subdivided:
      for (int c = 0; c < 4; ++c)
        assemble_sparse_node(*a.child[c], m, cperm, riperm, eps);
      break;
    case BlockKind::Dense: {
      a.dense = Matrix::Zero(a.skel->rows(), a.skel->cols());
      for (int j = 0; j < a.skel->cols(); ++j) {
        const int oc = cperm[a.skel->col_lo + j];
        for (SparseMatrix::InnerIterator it(m, oc); it; ++it) {
          const int p = riperm[it.row()];
          if (p >= row_lo && p < row_hi) a.dense(p - row_lo, j) = it.value();
        }
      }
      break;
    }
    case BlockKind::LowRank: {
      std::vector<int> nzcols;
      std::vector<Vector> cols;
      for (int j = 0; j < a.skel->cols(); ++j) {
        const int oc = cperm[a.skel->col_lo + j];
        Vector col = Vector::Zero(a.skel->rows());
        bool any = false;
        for (SparseMatrix::InnerIterator it(m, oc); it; ++it) {
          const int p = riperm[it.row()];
          if (p >= row_lo && p < row_hi) {
            col(p - row_lo) = it.value();
            any = true;
          }
        }
        if (any) {
          nzcols.push_back(j);
          cols.push_back(std::move(col));
        }
      }
      const Eigen::Index q = static_cast<Eigen::Index>(nzcols.size());
      if (q == 0) {
        a.lr = LowRankBlock::zero(a.skel->rows(), a.skel->cols());
        break;
      }
      Matrix g(a.skel->rows(), q);
      for (Eigen::Index j = 0; j < q; ++j) g.col(j) = cols[j];
      const LowRankBlock thin = truncated_svd(g, eps);
      Matrix v = Matrix::Zero(a.skel->cols(), thin.rank());
      for (Eigen::Index j = 0; j < q; ++j) v.row(nzcols[j]) = thin.V.row(j);
      a.lr = {thin.U, std::move(v)};
      break;
    }
  }
}

}  // namespace

HMatrix assemble(const std::function<double(int, int)>& entry,
                 std::shared_ptr<const BlockTree> structure) {
  HMatrix h = h_zero(structure);
  assemble_node(h.root(), entry, structure->row_tree->perm,
                structure->col_tree->perm, structure->opts.epsilon);
  return h;
}

HMatrix assemble_sparse(const SparseMatrix& a,
                        std::shared_ptr<const BlockTree> structure) {
  if (a.rows() != structure->root->rows() ||
      a.cols() != structure->root->cols())
    throw ShapeMismatchError("assemble_sparse: size mismatch");
  SparseMatrix ac = a;
  ac.makeCompressed();
  HMatrix h = h_zero(structure);
  assemble_sparse_node(h.root(), ac, structure->col_tree->perm,
                       structure->row_tree->iperm, structure->opts.epsilon);
  return h;
}

Vector h_matvec(const HMatrix& h, const Vector& x) {
  if (x.size() != h.cols())
    throw ShapeMismatchError("h_matvec: length mismatch");
  Matrix y = Matrix::Zero(h.rows(), 1);
  apply_add(h.root(), x, y, 1.0);
  return y.col(0);
}

Vector h_matvec_transpose(const HMatrix& h, const Vector& x) {
  if (x.size() != h.rows())
    throw ShapeMismatchError("h_matvec_transpose: length mismatch");
  Matrix y = Matrix::Zero(h.cols(), 1);
  apply_transpose_add(h.root(), x, y, 1.0);
  return y.col(0);
}

namespace {

void require_same_structure(const HMatrix& a, const HMatrix& b,
                            const char* op) {
  if (a.structure().get() != b.structure().get())
    throw ShapeMismatchError(std::string(op) + ": operand tree mismatch");
}

}  // namespace

HMatrix h_add(const HMatrix& a, const HMatrix& b, double eps) {
  require_same_structure(a, b, "h_add");
  HMatrix c = a.clone();
  axpy_node(c.root(), b.root(), 1.0, eps);
  return c;
}

void h_axpy(HMatrix& y, const HMatrix& x, double alpha, double eps) {
  require_same_structure(y, x, "h_axpy");
  axpy_node(y.root(), x.root(), alpha, eps);
}

HMatrix h_mul(const HMatrix& a, const HMatrix& b, double eps) {
  require_same_structure(a, b, "h_mul");
  HMatrix c = h_zero(a.structure());
  multiply_add(c.root(), a.root(), b.root(), 1.0, eps);
  return c;
}

HMatrix h_invert(const HMatrix& a, double eps) {
  if (a.rows() != a.cols()) throw ShapeMismatchError("h_invert: not square");
  return make_hmatrix(a.structure(), invert_node(a.root(), eps));
}

void h_scale_rows(HMatrix& h, const Vector& d) {
  if (d.size() != h.rows()) throw ShapeMismatchError("h_scale_rows: length");
  scale_rows_node(h.root(), d);
}

void h_scale_cols(HMatrix& h, const Vector& d) {
  if (d.size() != h.cols()) throw ShapeMismatchError("h_scale_cols: length");
  scale_cols_node(h.root(), d);
}

namespace {

template <typename F>
void for_each_payload_leaf(const Node& a, F&& f) {
  if (a.kind() == BlockKind::Subdivided) {
    for (const auto& c : a.child) for_each_payload_leaf(*c, f);
  } else {
    f(a);
  }
}

}  // namespace

std::size_t footprint(const HMatrix& h) {
  std::size_t bytes = 0;
  for_each_payload_leaf(h.root(), [&](const Node& a) {
    if (a.kind() == BlockKind::Dense) {
      bytes += 8u * static_cast<std::size_t>(a.dense.size());
    } else {
      bytes += 8u * static_cast<std::size_t>(a.lr.rank()) *
               static_cast<std::size_t>(a.lr.rows() + a.lr.cols());
    }
  });
  return bytes;
}

RankStats rank_stats(const HMatrix& h) {
  RankStats s;
  double sum = 0.0;
  for_each_payload_leaf(h.root(), [&](const Node& a) {
    if (a.kind() == BlockKind::LowRank) {
      ++s.low_rank_leaves;
      s.max_rank = std::max<int>(s.max_rank, static_cast<int>(a.lr.rank()));
      sum += static_cast<double>(a.lr.rank());
    }
  });
  if (s.low_rank_leaves > 0) s.avg_rank = sum / s.low_rank_leaves;
  return s;
}

Matrix densify(const HMatrix& h) { return densify_node(h.root()); }

double h_fnorm(const HMatrix& h) {
  double sq = 0.0;
  for_each_payload_leaf(h.root(), [&](const Node& a) {
    if (a.kind() == BlockKind::Dense) {
      sq += a.dense.squaredNorm();
    } else if (a.lr.rank() > 0) {
      sq += ((a.lr.U.transpose() * a.lr.U)
                 .cwiseProduct(a.lr.V.transpose() * a.lr.V))
                .sum();
    }
  });
  return std::sqrt(sq);
}

void dump_structure_csv(const HMatrix& h, std::ostream& os) {
  os << "row_lo,row_hi,col_lo,col_hi,kind,rank\n";
  for_each_payload_leaf(h.root(), [&](const Node& a) {
    const char* kind = a.kind() == BlockKind::Dense ? "dense" : "lowrank";
    const long rank =
        a.kind() == BlockKind::Dense ? -1 : static_cast<long>(a.lr.rank());
    os << a.skel->row_lo << ',' << a.skel->row_hi << ',' << a.skel->col_lo
       << ',' << a.skel->col_hi << ',' << kind << ',' << rank << '\n';
  });
}

}  // namespace acr
