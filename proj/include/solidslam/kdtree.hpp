#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "solidslam/types.hpp"

namespace solidslam {

struct Neighbor {
  std::size_t index = 0;  ///< into KdTree::points()
  double squared_distance = 0.0;
};

/// Static 3-D tree, bulk-loaded by median splits on the widest axis.
/// Ties in distance are broken by point index, so results are deterministic.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(PointCloud points);

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] bool empty() const { return points_.empty(); }
  [[nodiscard]] const PointCloud& points() const { return points_; }

  /// Up to k nearest points, sorted by ascending distance.
  [[nodiscard]] std::vector<Neighbor> nearest(const Point3& query, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin = 0;  // range into order_ (leaves)
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;            // -1 for leaves
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Point3& q, std::size_t k,
              std::vector<Neighbor>& best) const;

  PointCloud points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace solidslam
