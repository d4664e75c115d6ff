#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <vector>

namespace acr {

/// Axis-aligned bounding box in the plane.
struct BBox2 {
  Eigen::Vector2d lo = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi = Eigen::Vector2d::Zero();

  double diameter() const { return (hi - lo).norm(); }
};

/// Euclidean gap between two boxes (0 if they overlap or touch).
double bbox_distance(const BBox2& a, const BBox2& b);

struct ClusterNode {
  int lo = 0;  ///< first owned position in the permuted ordering
  int hi = 0;  ///< one past the last owned position
  BBox2 box;
  int child[2] = {-1, -1};  ///< indices into ClusterTree::nodes, -1 for leaves

  bool is_leaf() const { return child[0] < 0; }
  int size() const { return hi - lo; }
};

/// Geometric binary cluster tree over a set of plane points.
///
/// Built by recursive bisection along the longer bounding-box axis. Points are
/// permuted so every node owns a contiguous interval [lo, hi); recursion stops
/// at n_min points.
class ClusterTree {
public:
  std::vector<ClusterNode> nodes;  ///< nodes[0] is the root, preorder
  std::vector<int> perm;           ///< permuted position -> original index
  std::vector<int> iperm;          ///< original index -> permuted position
  int n_min = 32;

  const ClusterNode& root() const { return nodes.front(); }
  int size() const { return static_cast<int>(perm.size()); }
  int depth() const;
  int leaf_count() const;

  /// Gathers a vector given in original index order into tree order.
  Eigen::VectorXd to_tree_order(const Eigen::VectorXd& x) const;
  /// Scatters a vector in tree order back to original index order.
  Eigen::VectorXd to_natural_order(const Eigen::VectorXd& x) const;
};

ClusterTree build_cluster_tree(const std::vector<Eigen::Vector2d>& points,
                               int n_min);

/// Sentinel for the weak admissibility condition: every separated pair of
/// clusters is admissible.
inline constexpr double kWeakAdmissibility =
    std::numeric_limits<double>::infinity();

/// Standard admissibility test min(diam(tau), diam(sigma)) <= eta * dist.
/// With eta == kWeakAdmissibility the test is dist > 0.
bool is_admissible(const ClusterNode& tau, const ClusterNode& sigma,
                   double eta);

}  // namespace acr
