#include "acr/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acr/errors.hpp"

namespace acr {

double bbox_distance(const BBox2& a, const BBox2& b) {
  double sq = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double gap = std::max({0.0, a.lo(d) - b.hi(d), b.lo(d) - a.hi(d)});
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

namespace {

BBox2 bounding_box(const std::vector<Eigen::Vector2d>& pts,
                   const std::vector<int>& order, int lo, int hi) {
  BBox2 box;
  box.lo = pts[order[lo]];
  box.hi = pts[order[lo]];
  for (int i = lo + 1; i < hi; ++i) {
    box.lo = box.lo.cwiseMin(pts[order[i]]);
    box.hi = box.hi.cwiseMax(pts[order[i]]);
  }
  return box;
}

struct Builder {
  const std::vector<Eigen::Vector2d>& pts;
  std::vector<int>& order;
  ClusterTree& tree;

  int build(int lo, int hi) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].lo = lo;
    tree.nodes[id].hi = hi;
    tree.nodes[id].box = bounding_box(pts, order, lo, hi);

    if (hi - lo > tree.n_min) {
      const BBox2 box = tree.nodes[id].box;
      const int axis = (box.hi(0) - box.lo(0) >= box.hi(1) - box.lo(1)) ? 0 : 1;
      // Deterministic ordering: coordinate along the split axis, then the
      // original point index. Split at ceil(count / 2).
      std::sort(order.begin() + lo, order.begin() + hi, [&](int a, int b) {
        if (pts[a](axis) != pts[b](axis)) return pts[a](axis) < pts[b](axis);
        return a < b;
      });
      const int mid = lo + (hi - lo + 1) / 2;
      const int c0 = build(lo, mid);
      const int c1 = build(mid, hi);
      tree.nodes[id].child[0] = c0;
      tree.nodes[id].child[1] = c1;
    }
    return id;
  }
};

}  // namespace

ClusterTree build_cluster_tree(const std::vector<Eigen::Vector2d>& points,
                               int n_min) {
  if (points.empty())
    throw InvalidInputError("build_cluster_tree: no points");
  if (n_min < 1) throw InvalidInputError("build_cluster_tree: n_min < 1");

  ClusterTree tree;
  tree.n_min = n_min;
  tree.perm.resize(points.size());
  std::iota(tree.perm.begin(), tree.perm.end(), 0);

  Builder builder{points, tree.perm, tree};
  builder.build(0, static_cast<int>(points.size()));

  tree.iperm.resize(points.size());
  for (int p = 0; p < tree.size(); ++p) tree.iperm[tree.perm[p]] = p;
  return tree;
}

int ClusterTree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[id].is_leaf()) {
      stack.push_back({nodes[id].child[0], d + 1});
      stack.push_back({nodes[id].child[1], d + 1});
    }
  }
  return deepest;
}

int ClusterTree::leaf_count() const {
  int count = 0;
  for (const auto& n : nodes)
    if (n.is_leaf()) ++count;
  return count;
}

Eigen::VectorXd ClusterTree::to_tree_order(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(x.size());
  for (int p = 0; p < size(); ++p) y(p) = x(perm[p]);
  return y;
}

Eigen::VectorXd ClusterTree::to_natural_order(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(x.size());
  for (int p = 0; p < size(); ++p) y(perm[p]) = x(p);
  return y;
}

bool is_admissible(const ClusterNode& tau, const ClusterNode& sigma,
                   double eta) {
  const double dist = bbox_distance(tau.box, sigma.box);
  if (std::isinf(eta)) return dist > 0.0;
  if (dist <= 0.0) return false;  // touching clusters are never admissible
  const double diam = std::min(tau.box.diameter(), sigma.box.diameter());
  return diam <= eta * dist;
}

}  // namespace acr
