#include "acr/cr.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <utility>

#include "acr/errors.hpp"

namespace acr {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Vector permute_to_tree(const ClusterTree& tree, const Vector& d) {
  return tree.to_tree_order(d);
}

/// a * inv * b, truncated at eps. Diagonal couplings scale the inverse in
/// place of a full product.
HMatrix coupling_triple(const Coupling& a, const HMatrix& inv,
                        const Coupling& b, double eps) {
  HMatrix t;
  if (const auto* da = std::get_if<Vector>(&a)) {
    t = inv.clone();
    h_scale_rows(t, *da);
  } else {
    t = h_mul(std::get<HMatrix>(a), inv, eps);
  }
  if (const auto* db = std::get_if<Vector>(&b)) {
    h_scale_cols(t, *db);
  } else {
    t = h_mul(t, std::get<HMatrix>(b), eps);
  }
  return t;
}

void negate(HMatrix& h) {
  h_scale_rows(h, Vector::Constant(h.rows(), -1.0));
}

std::size_t coupling_bytes(const Coupling& c) {
  if (const auto* d = std::get_if<Vector>(&c)) return 8u * d->size();
  if (const auto* h = std::get_if<HMatrix>(&c)) return footprint(*h);
  return 0;
}

void merge_rank_stats(const HMatrix& h, LevelStats& ls, std::int64_t& leaves,
                      double& rank_sum) {
  RankStats rs = rank_stats(h);
  ls.max_rank = std::max(ls.max_rank, rs.max_rank);
  leaves += rs.low_rank_leaves;
  rank_sum += rs.avg_rank * rs.low_rank_leaves;
}

void merge_coupling_stats(const Coupling& c, LevelStats& ls,
                          std::int64_t& leaves, double& rank_sum) {
  if (const auto* h = std::get_if<HMatrix>(&c)) {
    merge_rank_stats(*h, ls, leaves, rank_sum);
  }
}

}  // namespace

void apply_coupling(const Coupling& c, const Vector& x, double alpha,
                    Vector& y) {
  if (const auto* d = std::get_if<Vector>(&c)) {
    y += alpha * d->cwiseProduct(x);
  } else if (const auto* h = std::get_if<HMatrix>(&c)) {
    y += alpha * h_matvec(*h, x);
  }
}

ACRPreconditioner acr_setup(const BlockTridiagonalSystem& sys,
                            const HOptions& opts, int coarse_threshold) {
  opts.validate();
  if (sys.nrows < 1 || sys.block < 1) {
    throw InvalidInputError("acr_setup: empty system");
  }
  if (static_cast<int>(sys.diag.size()) != sys.nrows ||
      static_cast<int>(sys.sub.size()) != sys.nrows - 1 ||
      static_cast<int>(sys.sup.size()) != sys.nrows - 1) {
    throw ShapeMismatchError("acr_setup: block count mismatch");
  }

  ACRPreconditioner p;
  p.nrows = sys.nrows;
  p.block = sys.block;
  p.opts = opts;

  const double t_start = now_seconds();

  std::vector<Eigen::Vector2d> points = sys.plane_points;
  if (points.empty()) {
    // Systems without geometry (hand-built examples) cluster along a line.
    points.resize(sys.block);
    for (int i = 0; i < sys.block; ++i) points[i] = {double(i), 0.0};
  }
  auto tree = std::make_shared<const ClusterTree>(
      build_cluster_tree(points, opts.n_min));
  p.plane_tree = tree;
  p.structure = build_block_tree(tree, tree, opts);
  const double eps = opts.epsilon;

  std::vector<HMatrix> diag(sys.nrows);
  for (int k = 0; k < sys.nrows; ++k) {
    diag[k] = assemble_sparse(sys.diag[k], p.structure);
  }
  std::vector<Coupling> lower(sys.nrows), upper(sys.nrows);
  for (int k = 0; k + 1 < sys.nrows; ++k) {
    lower[k + 1] = permute_to_tree(*tree, sys.sub[k]);
    upper[k] = permute_to_tree(*tree, sys.sup[k]);
  }

  std::vector<int> active(sys.nrows);
  for (int k = 0; k < sys.nrows; ++k) active[k] = k;

  while (!active.empty()) {
    const int len = static_cast<int>(active.size());
    if (coarse_threshold > 1 && len <= coarse_threshold) break;

    const double t_level = now_seconds();
    const int level = static_cast<int>(p.levels.size());
    ACRPreconditioner::Level lv;

    // Invert the red (odd 1-based position) diagonal blocks and archive
    // their couplings.
    for (int pos = 0; pos < len; pos += 2) {
      const int r = active[pos];
      ACRPreconditioner::EliminatedRow er;
      er.row = r;
      er.left = pos > 0 ? active[pos - 1] : -1;
      er.right = pos + 1 < len ? active[pos + 1] : -1;
      try {
        er.inv = h_invert(diag[r], eps);
      } catch (const SingularPivotError& e) {
        throw SingularPivotError(e.what(), level, r);
      }
      diag[r] = HMatrix();
      er.lower = std::move(lower[r]);
      er.upper = std::move(upper[r]);
      lower[r] = std::monostate{};
      upper[r] = std::monostate{};
      lv.red.push_back(std::move(er));
    }

    // Update the surviving (black) rows with the Schur contributions of
    // their red neighbors and rewrite their couplings.
    std::vector<int> next;
    for (int pos = 1; pos < len; pos += 2) {
      const int j = active[pos];
      const auto& rm = lv.red[pos / 2];  // left red neighbor
      const auto* rp =
          pos + 1 < len ? &lv.red[(pos + 1) / 2] : nullptr;  // right red

      {
        HMatrix t = coupling_triple(lower[j], rm.inv, rm.upper, eps);
        h_axpy(diag[j], t, -1.0, eps);
      }
      if (rp) {
        HMatrix t = coupling_triple(upper[j], rp->inv, rp->lower, eps);
        h_axpy(diag[j], t, -1.0, eps);
      }

      Coupling new_lower, new_upper;
      if (has_coupling(rm.lower)) {
        HMatrix t = coupling_triple(lower[j], rm.inv, rm.lower, eps);
        negate(t);
        new_lower = std::move(t);
      }
      if (rp && has_coupling(rp->upper)) {
        HMatrix t = coupling_triple(upper[j], rp->inv, rp->upper, eps);
        negate(t);
        new_upper = std::move(t);
      }

      ACRPreconditioner::SurvivorEdge edge;
      edge.row = j;
      edge.left = rm.row;
      edge.right = rp ? rp->row : -1;
      edge.lower = std::move(lower[j]);
      edge.upper = rp ? std::move(upper[j]) : Coupling{};
      lv.black.push_back(std::move(edge));

      lower[j] = std::move(new_lower);
      upper[j] = std::move(new_upper);
      next.push_back(j);
    }

    LevelStats ls;
    ls.level = level;
    ls.rows_eliminated = static_cast<int>(lv.red.size());
    ls.rows_remaining = static_cast<int>(next.size());
    std::int64_t lr_leaves = 0;
    double rank_sum = 0.0;
    for (const auto& er : lv.red) {
      ls.bytes += footprint(er.inv);
      ls.bytes += coupling_bytes(er.lower) + coupling_bytes(er.upper);
      merge_rank_stats(er.inv, ls, lr_leaves, rank_sum);
      merge_coupling_stats(er.lower, ls, lr_leaves, rank_sum);
      merge_coupling_stats(er.upper, ls, lr_leaves, rank_sum);
    }
    for (const auto& edge : lv.black) {
      ls.bytes += coupling_bytes(edge.lower) + coupling_bytes(edge.upper);
      merge_coupling_stats(edge.lower, ls, lr_leaves, rank_sum);
      merge_coupling_stats(edge.upper, ls, lr_leaves, rank_sum);
    }
    ls.low_rank_leaves = lr_leaves;
    ls.avg_rank = lr_leaves > 0 ? rank_sum / lr_leaves : 0.0;
    ls.seconds = now_seconds() - t_level;
    p.stats.levels.push_back(ls);
    p.stats.total_bytes += ls.bytes;

    p.levels.push_back(std::move(lv));
    active = std::move(next);
  }

  if (!active.empty()) {
    // Early stop: assemble the remaining block-tridiagonal rows densely.
    const int m = static_cast<int>(active.size());
    const int b = sys.block;
    Matrix coarse = Matrix::Zero(m * b, m * b);
    for (int q = 0; q < m; ++q) {
      coarse.block(q * b, q * b, b, b) = densify(diag[active[q]]);
      if (q > 0 && has_coupling(lower[active[q]])) {
        Matrix c(b, b);
        if (const auto* d = std::get_if<Vector>(&lower[active[q]])) {
          c = d->asDiagonal();
        } else {
          c = densify(std::get<HMatrix>(lower[active[q]]));
        }
        coarse.block(q * b, (q - 1) * b, b, b) = c;
      }
      if (q + 1 < m && has_coupling(upper[active[q]])) {
        Matrix c(b, b);
        if (const auto* d = std::get_if<Vector>(&upper[active[q]])) {
          c = d->asDiagonal();
        } else {
          c = densify(std::get<HMatrix>(upper[active[q]]));
        }
        coarse.block(q * b, (q + 1) * b, b, b) = c;
      }
    }
    p.coarse.rows = active;
    p.coarse.lu.compute(coarse);
    const Vector ud = p.coarse.lu.matrixLU().diagonal().cwiseAbs();
    const double dmax = ud.maxCoeff();
    if (!(dmax > 0.0) ||
        ud.minCoeff() <=
            dmax * coarse.rows() * std::numeric_limits<double>::epsilon()) {
      throw SingularPivotError("acr_setup: coarse block is singular",
                               static_cast<int>(p.levels.size()), active[0]);
    }
    p.stats.total_bytes += 8u * static_cast<std::size_t>(m * b) * (m * b);
  }

  p.stats.setup_seconds = now_seconds() - t_start;
  return p;
}

Vector ACRPreconditioner::apply(const Vector& f) const {
  if (f.size() != size()) {
    throw ShapeMismatchError("acr_apply: length mismatch");
  }
  const int b = block;
  Vector w(f.size());
  for (int k = 0; k < nrows; ++k) {
    w.segment(static_cast<std::int64_t>(k) * b, b) =
        plane_tree->to_tree_order(f.segment(static_cast<std::int64_t>(k) * b,
                                            b));
  }
  auto seg = [b](Vector& v, int k) {
    return v.segment(static_cast<std::int64_t>(k) * b, b);
  };

  // Forward pass: fold each red row's solved contribution into its
  // surviving neighbors.
  Vector g = Vector::Zero(f.size());  // inv_r * f_r, one slot per red row
  for (const auto& lv : levels) {
    for (const auto& er : lv.red) {
      seg(g, er.row) = h_matvec(er.inv, seg(w, er.row));
    }
    for (const auto& edge : lv.black) {
      Vector acc = seg(w, edge.row);
      apply_coupling(edge.lower, seg(g, edge.left), -1.0, acc);
      if (edge.right >= 0) {
        apply_coupling(edge.upper, seg(g, edge.right), -1.0, acc);
      }
      seg(w, edge.row) = acc;
    }
  }

  Vector x = Vector::Zero(f.size());
  if (!coarse.rows.empty()) {
    const int m = static_cast<int>(coarse.rows.size());
    Vector rhs(static_cast<std::int64_t>(m) * b);
    for (int q = 0; q < m; ++q) rhs.segment(q * b, b) = seg(w, coarse.rows[q]);
    Vector sol = coarse.lu.solve(rhs);
    for (int q = 0; q < m; ++q) seg(x, coarse.rows[q]) = sol.segment(q * b, b);
  }

  // Backward pass, deepest level first.
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    for (const auto& er : it->red) {
      Vector rhs = seg(w, er.row);
      if (er.left >= 0) apply_coupling(er.lower, seg(x, er.left), -1.0, rhs);
      if (er.right >= 0) apply_coupling(er.upper, seg(x, er.right), -1.0, rhs);
      seg(x, er.row) = h_matvec(er.inv, rhs);
    }
  }

  Vector out(f.size());
  for (int k = 0; k < nrows; ++k) {
    out.segment(static_cast<std::int64_t>(k) * b, b) =
        plane_tree->to_natural_order(
            x.segment(static_cast<std::int64_t>(k) * b, b));
  }
  return out;
}

Vector acr_apply(const ACRPreconditioner& p, const Vector& f) {
  return p.apply(f);
}

void ACRPreconditioner::dump_level_csv(std::ostream& os) const {
  os << "level,rows_remaining,max_rank,avg_rank,bytes,seconds\n";
  for (const auto& ls : stats.levels) {
    os << ls.level << ',' << ls.rows_remaining << ',' << ls.max_rank << ','
       << ls.avg_rank << ',' << ls.bytes << ',' << ls.seconds << '\n';
  }
}

Vector exact_cr_solve(const BlockTridiagonalSystem& sys, const Vector& f) {
  if (f.size() != sys.size()) {
    throw ShapeMismatchError("exact_cr_solve: length mismatch");
  }
  const int n = sys.nrows;
  const int b = sys.block;

  struct DenseRed {
    int row, left, right;
    Eigen::PartialPivLU<Matrix> lu;
    Matrix lower, upper;  // zero-sized when absent
  };
  struct DenseEdge {
    int row, left, right;
    Matrix lower, upper;
  };
  struct DenseLevel {
    std::vector<DenseRed> red;
    std::vector<DenseEdge> black;
  };

  std::vector<Matrix> diag(n), lower(n), upper(n);
  for (int k = 0; k < n; ++k) diag[k] = Matrix(sys.diag[k]);
  for (int k = 0; k + 1 < n; ++k) {
    lower[k + 1] = Matrix(sys.sub[k].asDiagonal());
    upper[k] = Matrix(sys.sup[k].asDiagonal());
  }

  auto checked_lu = [&](const Matrix& a, int level, int row) {
    Eigen::PartialPivLU<Matrix> lu(a);
    const Vector d = lu.matrixLU().diagonal().cwiseAbs();
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0) ||
        d.minCoeff() <=
            dmax * a.rows() * std::numeric_limits<double>::epsilon()) {
      throw SingularPivotError("exact_cr_solve: singular diagonal block",
                               level, row);
    }
    return lu;
  };

  std::vector<DenseLevel> levels;
  std::vector<int> active(n);
  for (int k = 0; k < n; ++k) active[k] = k;
  while (!active.empty()) {
    const int len = static_cast<int>(active.size());
    DenseLevel lv;
    for (int pos = 0; pos < len; pos += 2) {
      const int r = active[pos];
      DenseRed er{r, pos > 0 ? active[pos - 1] : -1,
                  pos + 1 < len ? active[pos + 1] : -1,
                  checked_lu(diag[r], static_cast<int>(levels.size()), r),
                  std::move(lower[r]), std::move(upper[r])};
      diag[r].resize(0, 0);
      lv.red.push_back(std::move(er));
    }
    std::vector<int> next;
    for (int pos = 1; pos < len; pos += 2) {
      const int j = active[pos];
      const auto& rm = lv.red[pos / 2];
      const auto* rp = pos + 1 < len ? &lv.red[(pos + 1) / 2] : nullptr;

      diag[j] -= lower[j] * rm.lu.solve(rm.upper);
      if (rp) diag[j] -= upper[j] * rp->lu.solve(rp->lower);
      Matrix new_lower, new_upper;
      if (rm.lower.size() > 0) new_lower = -lower[j] * rm.lu.solve(rm.lower);
      if (rp && rp->upper.size() > 0) {
        new_upper = -upper[j] * rp->lu.solve(rp->upper);
      }
      lv.black.push_back({j, rm.row, rp ? rp->row : -1, std::move(lower[j]),
                          rp ? std::move(upper[j]) : Matrix()});
      lower[j] = std::move(new_lower);
      upper[j] = std::move(new_upper);
      next.push_back(j);
    }
    levels.push_back(std::move(lv));
    active = std::move(next);
  }

  Vector w = f;
  Vector g = Vector::Zero(f.size());
  auto seg = [b](Vector& v, int k) { return v.segment(k * b, b); };
  for (const auto& lv : levels) {
    for (const auto& er : lv.red) {
      seg(g, er.row) = er.lu.solve(seg(w, er.row));
    }
    for (const auto& edge : lv.black) {
      if (edge.lower.size() > 0) {
        seg(w, edge.row) -= edge.lower * seg(g, edge.left);
      }
      if (edge.right >= 0 && edge.upper.size() > 0) {
        seg(w, edge.row) -= edge.upper * seg(g, edge.right);
      }
    }
  }
  Vector x = Vector::Zero(f.size());
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    for (const auto& er : it->red) {
      Vector rhs = seg(w, er.row);
      if (er.left >= 0 && er.lower.size() > 0) {
        rhs -= er.lower * x.segment(er.left * b, b);
      }
      if (er.right >= 0 && er.upper.size() > 0) {
        rhs -= er.upper * x.segment(er.right * b, b);
      }
      seg(x, er.row) = er.lu.solve(rhs);
    }
  }
  return x;
}

}  // namespace acr
