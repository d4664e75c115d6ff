#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <functional>
#include <sstream>
#include <vector>

#include "acr/errors.hpp"
#include "acr/hmatrix.hpp"
#include "test_util.hpp"

using namespace acr;
using namespace acr::testing;

namespace {

void visit_leaves(const BlockNode& node,
                  const std::function<void(const BlockNode&)>& fn) {
  if (node.kind == BlockKind::Subdivided) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) visit_leaves(node.sub(i, j), fn);
  } else {
    fn(node);
  }
}

HMatrix assemble_dense(const Matrix& a,
                       std::shared_ptr<const BlockTree> structure) {
  return assemble([&a](int i, int j) { return a(i, j); }, structure);
}

}  // namespace

TEST_CASE("block tree leaves tile the index square exactly once") {
  auto structure = grid_structure(12, {1e-6, 1.5, 8});
  Matrix cover = Matrix::Zero(144, 144);
  visit_leaves(*structure->root, [&](const BlockNode& leaf) {
    cover.block(leaf.row_lo, leaf.col_lo, leaf.rows(), leaf.cols()).array() +=
        1.0;
  });
  CHECK(cover.minCoeff() == 1.0);
  CHECK(cover.maxCoeff() == 1.0);
}

TEST_CASE("low-rank leaves are admissible, dense leaves are not") {
  auto structure = grid_structure(12, {1e-6, 1.5, 8});
  const auto& rt = *structure->row_tree;
  const auto& ct = *structure->col_tree;
  visit_leaves(*structure->root, [&](const BlockNode& leaf) {
    const auto& tau = rt.nodes[leaf.row_cluster];
    const auto& sigma = ct.nodes[leaf.col_cluster];
    if (leaf.kind == BlockKind::LowRank) {
      CHECK(is_admissible(tau, sigma, structure->opts.eta));
    } else {
      CHECK_FALSE(is_admissible(tau, sigma, structure->opts.eta));
      CHECK((tau.is_leaf() || sigma.is_leaf()));
    }
  });
}

TEST_CASE("weak admissibility yields the off-diagonal low-rank pattern") {
  auto structure = line_structure(64, HOptions::weak(1e-6, 8));
  // Both off-diagonal children of the root must already be low-rank leaves.
  const BlockNode& root = *structure->root;
  REQUIRE(root.kind == BlockKind::Subdivided);
  CHECK(root.sub(0, 1).kind == BlockKind::LowRank);
  CHECK(root.sub(1, 0).kind == BlockKind::LowRank);
  visit_leaves(root, [&](const BlockNode& leaf) {
    if (leaf.kind == BlockKind::Dense) {
      CHECK(leaf.row_lo == leaf.col_lo);  // dense only on the diagonal
    }
  });
}

TEST_CASE("single-leaf trees give one dense root leaf") {
  auto structure = line_structure(10, {1e-6, 2.0, 16});
  CHECK(structure->root->kind == BlockKind::Dense);
  CHECK(structure->dense_leaves() == 1);
  CHECK(structure->low_rank_leaves() == 0);
}

TEST_CASE("line of 128 points keeps near-diagonal blocks dense and small") {
  auto structure = line_structure(128, {1e-6, 1.0, 8});
  visit_leaves(*structure->root, [&](const BlockNode& leaf) {
    if (leaf.kind == BlockKind::Dense) {
      CHECK(std::min(leaf.rows(), leaf.cols()) <= 8);
    }
  });
  CHECK(structure->low_rank_leaves() > 0);
}

TEST_CASE("identity assembly has rank-0 admissible leaves") {
  auto structure = grid_structure(12, {1e-8, 2.0, 16});
  HMatrix h = assemble([](int i, int j) { return i == j ? 1.0 : 0.0; },
                       structure);
  RankStats rs = rank_stats(h);
  CHECK(rs.max_rank == 0);
  CHECK((densify(h) - Matrix::Identity(144, 144)).norm() == 0.0);

  Vector x = random_vector(144, 1);
  CHECK((h_matvec(h, x) - x).norm() == 0.0);

  // bytes come from dense leaves only when every low-rank leaf is empty
  std::size_t dense_bytes = 0;
  visit_leaves(*structure->root, [&](const BlockNode& leaf) {
    if (leaf.kind == BlockKind::Dense) {
      dense_bytes += 8u * std::size_t(leaf.rows()) * leaf.cols();
    }
  });
  CHECK(footprint(h) == dense_bytes);
}

TEST_CASE("single dense leaf footprint is 8 m n bytes") {
  auto structure = line_structure(10, {1e-6, 2.0, 16});
  HMatrix h = assemble_dense(random_matrix(10, 10, 2), structure);
  CHECK(footprint(h) == 800);
}

TEST_CASE("sparse assembly of a plane operator matches the sparse matvec") {
  const int n = 16;
  SparseMatrix a = plane_laplacian(n);
  auto structure = grid_structure(n, {1e-9, 2.0, 16});
  HMatrix h = assemble_sparse(a, structure);

  Vector x = random_vector(n * n, 3);
  Vector y_tree = h_matvec(h, structure->col_tree->to_tree_order(x));
  Vector y = structure->row_tree->to_natural_order(y_tree);
  Vector y_ref = a * x;
  CHECK((y - y_ref).norm() <= 1e-8 * y_ref.norm());
}

TEST_CASE("assembly satisfies the leafwise truncation bound") {
  const int n = 16;
  // Use a dense inverse of a plane operator: smooth off-diagonal blocks.
  Matrix inv = Matrix(plane_laplacian(n)).inverse();
  const double eps = 1e-3;
  auto structure = grid_structure(n, {eps, 2.0, 16});
  HMatrix h = assemble_dense(inv, structure);

  Matrix tree_ref = to_tree_ordering(inv, *structure);
  std::function<void(const HMatrix::Node&)> rec =
      [&](const HMatrix::Node& node) {
        const BlockNode& s = *node.skel;
        if (s.kind == BlockKind::Subdivided) {
          for (int i = 0; i < 4; ++i) rec(*node.child[i]);
        } else if (s.kind == BlockKind::LowRank) {
          Matrix exact = tree_ref.block(s.row_lo, s.col_lo, s.rows(), s.cols());
          CHECK((exact - node.lr.dense()).norm() <= eps * exact.norm() + 1e-15);
        } else {
          Matrix exact = tree_ref.block(s.row_lo, s.col_lo, s.rows(), s.cols());
          CHECK((exact - node.dense).norm() == 0.0);
        }
      };
  rec(h.root());

  // compression pays off for a smooth kernel
  CHECK(footprint(h) < 8u * 256u * 256u);
}

TEST_CASE("matvec agrees with the densified representation") {
  auto structure = grid_structure(14, {1e-4, 2.0, 12});
  HMatrix h = assemble_dense(random_matrix(196, 196, 4), structure);
  Matrix d = densify(h);
  Vector x = random_vector(196, 5);
  Vector y = h_matvec(h, x);
  CHECK((y - d * x).norm() <= 1e-14 * (d * x).norm() + 1e-300);
  Vector yt = h_matvec_transpose(h, x);
  CHECK((yt - d.transpose() * x).norm() <= 1e-13 * yt.norm());
}

TEST_CASE("zero H-matrix applies to zero") {
  auto structure = grid_structure(10, {1e-6, 2.0, 8});
  HMatrix z = h_zero(structure);
  Vector x = random_vector(100, 6);
  CHECK(h_matvec(z, x).norm() == 0.0);
  CHECK(h_fnorm(z) == 0.0);
}

TEST_CASE("adding zero reproduces the operand") {
  auto structure = grid_structure(12, {1e-8, 2.0, 12});
  Matrix a = random_matrix(144, 144, 7);
  HMatrix ha = assemble_dense(a, structure);
  HMatrix sum = h_add(ha, h_zero(structure), 1e-8);
  Matrix diff = densify(sum) - densify(ha);
  CHECK(diff.norm() <= 1e-7 * a.norm());
}

TEST_CASE("multiplying by the identity reproduces the operand within eps") {
  const double eps = 1e-6;
  auto structure = grid_structure(12, {eps, 2.0, 12});
  Matrix a = random_matrix(144, 144, 8);
  HMatrix ha = assemble_dense(a, structure);
  HMatrix prod = h_mul(ha, h_identity(structure), eps);
  Matrix err = densify(prod) - densify(ha);
  CHECK(err.norm() <= 10 * eps * a.norm());
}

TEST_CASE("256-point product tracks the dense oracle within 10 eps") {
  const double eps = 1e-6;
  auto structure = line_structure(256, {eps, 2.0, 32});
  Matrix a = random_matrix(256, 256, 9);
  Matrix b = random_matrix(256, 256, 10);
  HMatrix ha = assemble_dense(a, structure);
  HMatrix hb = assemble_dense(b, structure);
  HMatrix hc = h_mul(ha, hb, eps);
  Matrix exact = to_tree_ordering(a * b, *structure);
  CHECK((densify(hc) - exact).norm() <= 10 * eps * exact.norm());
}

TEST_CASE("axpy accumulates with truncation") {
  const double eps = 1e-8;
  auto structure = grid_structure(10, {eps, 2.0, 8});
  Matrix a = random_matrix(100, 100, 11);
  Matrix b = random_matrix(100, 100, 12);
  HMatrix ha = assemble_dense(a, structure);
  HMatrix hb = assemble_dense(b, structure);
  h_axpy(ha, hb, -2.5, eps);
  Matrix exact = to_tree_ordering(a - 2.5 * b, *structure);
  CHECK((densify(ha) - exact).norm() <= 1e-6 * exact.norm());
}

TEST_CASE("operations on mismatched trees are rejected") {
  auto s1 = grid_structure(10, {1e-6, 2.0, 8});
  auto s2 = grid_structure(10, {1e-6, 2.0, 8});
  HMatrix a = h_identity(s1);
  HMatrix b = h_identity(s2);
  CHECK_THROWS_AS(h_add(a, b, 1e-6), ShapeMismatchError);
  CHECK_THROWS_AS(h_mul(a, b, 1e-6), ShapeMismatchError);
}

TEST_CASE("inverting the identity returns the identity") {
  auto structure = grid_structure(12, {1e-10, 2.0, 12});
  HMatrix inv = h_invert(h_identity(structure), 1e-10);
  CHECK((densify(inv) - Matrix::Identity(144, 144)).norm() <= 1e-10);
  CHECK(rank_stats(inv).max_rank == 0);
}

TEST_CASE("inverse of a well-conditioned matrix matches the dense inverse") {
  const double eps = 1e-9;
  auto structure = grid_structure(12, {eps, 2.0, 12});
  Matrix a =
      Matrix::Identity(144, 144) * 5.0 + 0.5 * random_matrix(144, 144, 13);
  HMatrix ha = assemble_dense(a, structure);
  HMatrix hinv = h_invert(ha, eps);
  Matrix exact = to_tree_ordering(a, *structure).inverse();
  CHECK((densify(hinv) - exact).norm() <= 1e-5 * exact.norm());
}

TEST_CASE("plane operator inverse leaves a small residual") {
  const int n = 24;
  const double eps = 1e-8;
  auto structure = grid_structure(n, {eps, 2.0, 32});
  HMatrix ha = assemble_sparse(plane_laplacian(n), structure);
  HMatrix hinv = h_invert(ha, eps);
  Matrix prod = densify(ha) * densify(hinv);
  CHECK((prod - Matrix::Identity(n * n, n * n)).norm() <= 1e-4);
}

TEST_CASE("singular dense pivot raises a pivot error") {
  auto structure = line_structure(8, {1e-10, 2.0, 8});
  HMatrix z = h_zero(structure);
  CHECK_THROWS_AS(h_invert(z, 1e-10), SingularPivotError);
}

TEST_CASE("row and column scaling act like diagonal multiplications") {
  auto structure = grid_structure(10, {1e-8, 2.0, 8});
  Matrix a = random_matrix(100, 100, 14);
  Vector d = random_vector(100, 15).array() + 3.0;
  HMatrix h = assemble_dense(a, structure);
  Matrix before = densify(h);
  h_scale_rows(h, d);
  CHECK((densify(h) - Matrix(d.asDiagonal()) * before).norm() <= 1e-12);
  HMatrix h2 = assemble_dense(a, structure);
  h_scale_cols(h2, d);
  CHECK((densify(h2) - before * Matrix(d.asDiagonal())).norm() <= 1e-12);
}

TEST_CASE("frobenius norm matches the densified matrix") {
  auto structure = grid_structure(12, {1e-3, 2.0, 12});
  Matrix inv = Matrix(plane_laplacian(12)).inverse();
  HMatrix h = assemble_dense(inv, structure);
  CHECK(h_fnorm(h) == doctest::Approx(densify(h).norm()).epsilon(1e-12));
}

TEST_CASE("structure dump lists every leaf") {
  auto structure = grid_structure(12, {1e-3, 2.0, 8});
  HMatrix h = assemble_dense(Matrix(plane_laplacian(12)), structure);
  std::ostringstream os;
  dump_structure_csv(h, os);
  int lines = 0;
  std::string line;
  std::istringstream is(os.str());
  while (std::getline(is, line)) ++lines;
  CHECK(lines ==
        1 + structure->dense_leaves() + structure->low_rank_leaves());
}

TEST_CASE("clone is an independent deep copy") {
  auto structure = grid_structure(10, {1e-6, 2.0, 8});
  Matrix a = random_matrix(100, 100, 16);
  HMatrix h = assemble_dense(a, structure);
  HMatrix c = h.clone();
  h_scale_rows(h, Vector::Constant(100, 2.0));
  CHECK((densify(c) - to_tree_ordering(a, *structure)).norm() <= 1e-10);
}
