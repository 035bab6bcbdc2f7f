#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "solidslam/se3.hpp"
#include "solidslam/types.hpp"

namespace solidslam {

struct KeyframePolicy {
  double min_translation = 0.3;                   ///< meters
  double min_rotation = std::numbers::pi / 12.0;  ///< radians (15 deg)
  double max_interval = 1.0;                      ///< seconds

  void validate() const;
};

/// True iff the relative motion or the elapsed time crosses any threshold.
[[nodiscard]] bool is_keyframe(const Pose& delta, double elapsed, const KeyframePolicy& policy);

struct OccupancyParams {
  double resolution = 0.05;  ///< leaf edge, meters
  double prior = 0.5;
  double p_hit = 0.7;
  double p_miss = 0.4;
  double p_min = 0.12;
  double p_max = 0.97;

  void validate() const;
  bool operator==(const OccupancyParams&) const = default;
};

/// Recursive Bayes update of an occupancy probability:
///   [1 + (1-p_meas)/p_meas * (1-p_prev)/p_prev * prior/(1-prior)]^-1
/// clamped to [p_min, p_max].
[[nodiscard]] double fuse_occupancy(double p_prev, double p_meas, double prior,
                                    double p_min = 0.12, double p_max = 0.97);

[[nodiscard]] double logit(double p);
[[nodiscard]] double inverse_logit(double l);

/// Integer leaf coordinates, offset so the tree spans +-2^15 leaves per axis.
struct LeafKey {
  std::array<std::uint16_t, 3> k{};

  bool operator==(const LeafKey&) const = default;
  [[nodiscard]] std::uint64_t packed() const {
    return (std::uint64_t{k[0]} << 32) | (std::uint64_t{k[1]} << 16) | k[2];
  }
};

/// Fixed-depth octree with log-odds leaves. Untouched space reads as the prior.
class OccupancyOctree {
 public:
  static constexpr int kDepth = 16;

  explicit OccupancyOctree(OccupancyParams params = {});

  [[nodiscard]] const OccupancyParams& params() const { return params_; }

  /// Hits the endpoint leaf of every point and misses every leaf crossed by
  /// the sensor-origin -> endpoint ray. Within one scan each leaf is updated
  /// once and a hit beats a miss. Returns the number of leaf updates.
  std::size_t integrate_scan(const PointCloud& cloud, const Pose& pose);

  /// Single Bayes update of the leaf containing `p`.
  void update(const Point3& p, double p_meas);

  [[nodiscard]] double query(const Point3& p) const;

  /// One point per leaf with occupancy >= threshold, at the leaf center.
  [[nodiscard]] PointCloud export_occupied(double threshold) const;

  [[nodiscard]] bool key_of(const Point3& p, LeafKey& key) const;
  [[nodiscard]] Point3 center_of(const LeafKey& key) const;

  /// Leaf keys crossed by the segment, excluding the endpoint's own leaf.
  [[nodiscard]] std::vector<LeafKey> ray_keys(const Point3& origin, const Point3& end) const;

  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] std::size_t leaf_count() const { return leaves_; }

 private:
  struct Node {
    std::array<std::int32_t, 8> children;
    double log_odds;
  };

  void update_key(const LeafKey& key, double delta);
  [[nodiscard]] std::int32_t find(const LeafKey& key) const;
  void collect(std::int32_t node, int level, std::array<std::uint32_t, 3> base,
               double threshold, PointCloud& out) const;

  OccupancyParams params_;
  double l_min_;
  double l_max_;
  double l_prior_;
  double l_hit_;
  double l_miss_;
  std::vector<Node> nodes_;
  std::size_t leaves_ = 0;
};

}  // namespace solidslam
