#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>

#include "solidslam/features.hpp"
#include "solidslam/kdtree.hpp"
#include "solidslam/se3.hpp"

namespace solidslam {

struct OdometryParams {
  int window_size = 10;          ///< q, frames in the local map
  double edge_max_dist = 1.0;    ///< correspondence gate, meters
  double plane_max_dist = 1.0;
  double convergence_eps = 1e-3; ///< |dxi| threshold
  int max_iterations = 10;
  int max_step_halvings = 5;
  double edge_voxel = 0.05;      ///< 0 disables downsampling
  double plane_voxel = 0.10;
  int min_correspondences = 10;
  double max_condition = 1e12;

  void validate() const;
  bool operator==(const OdometryParams&) const = default;
};

struct Correspondence {
  enum class Kind { Edge, Plane };

  Kind kind = Kind::Edge;
  Point3 source = Point3::Zero();  ///< sensor frame
  std::array<Point3, 3> targets{Point3::Zero(), Point3::Zero(), Point3::Zero()};

  [[nodiscard]] std::size_t target_count() const { return kind == Kind::Edge ? 2 : 3; }
};

struct MapFrame {
  FeatureSet features;  ///< sensor frame
  Pose pose;            ///< sensor to world
};

/// Sliding window of the last q feature frames plus K-D trees over their
/// world-frame (voxel-downsampled) edge and planar points.
class LocalMap {
 public:
  [[nodiscard]] const std::deque<MapFrame>& window() const { return window_; }
  [[nodiscard]] const KdTree& edge_index() const { return edge_index_; }
  [[nodiscard]] const KdTree& plane_index() const { return plane_index_; }
  [[nodiscard]] bool empty() const { return window_.empty(); }

 private:
  friend LocalMap update_local_map(LocalMap map, const FeatureSet& features, const Pose& pose,
                                   const OdometryParams& params);

  std::deque<MapFrame> window_;
  KdTree edge_index_;
  KdTree plane_index_;
};

/// Appends the frame, evicts the oldest beyond q and rebuilds both indices.
[[nodiscard]] LocalMap update_local_map(LocalMap map, const FeatureSet& features,
                                        const Pose& pose, const OdometryParams& params);

/// Centroid per occupied voxel, ordered by voxel key. `leaf <= 0` copies.
[[nodiscard]] PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

/// Constant-velocity guess T_{k-1} T_{k-2}^-1 T_{k-1}.
[[nodiscard]] Pose predict_initial_pose(const Pose& prev, const Pose& prev2);

/// Same, from a pose history (oldest first): identity when empty, the last
/// pose when only one is known.
[[nodiscard]] Pose predict_initial_pose(std::span<const Pose> history);

/// The two nearest map edge points, both within max_dist and distinct.
[[nodiscard]] std::optional<Correspondence> find_edge_correspondence(const Point3& p_hat,
                                                                     const LocalMap& map,
                                                                     double max_dist);

/// The three nearest map planar points, all within max_dist, not collinear.
[[nodiscard]] std::optional<Correspondence> find_plane_correspondence(const Point3& p_hat,
                                                                      const LocalMap& map,
                                                                      double max_dist);

inline constexpr double kDegenerateLength = 1e-9;
inline constexpr double kMinTriangleArea = 1e-9;

/// Distance from p_hat to the line through e1, e2. Throws DegenerateEdge.
[[nodiscard]] double edge_residual(const Point3& p_hat, const Point3& e1, const Point3& e2);

/// Distance from p_hat to the plane through s1, s2, s3. Throws DegeneratePlane.
[[nodiscard]] double plane_residual(const Point3& p_hat, const Point3& s1, const Point3& s2,
                                    const Point3& s3);

/// n_p^T [ (e1 - e2) / |e1 - e2| ]x J_p, with n_p the unit normal of the
/// (p - e2, p - e1) parallelogram. Zero row when p_hat lies on the line.
[[nodiscard]] RowVector6 edge_jacobian(const Point3& p_hat, const Point3& e1, const Point3& e2,
                                       const Matrix36& j_p);

/// sign((p - s1)^T n) n^T J_p, with sign(0) = +1.
[[nodiscard]] RowVector6 plane_jacobian(const Point3& p_hat, const Point3& s1, const Point3& s2,
                                        const Point3& s3, const Matrix36& j_p);

struct PoseEstimate {
  Pose pose;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;  ///< sum of squared residuals at `pose`
  std::size_t edge_inliers = 0;
  std::size_t plane_inliers = 0;
  bool converged = false;
  /// Too few correspondences or an ill-conditioned system: `pose` is T_init.
  bool degenerate = false;
  double condition = 0.0;
};

/// Gauss-Newton scan-to-map registration with per-iteration re-association
/// and left updates T <- exp(dxi) T.
[[nodiscard]] PoseEstimate estimate_pose(const FeatureSet& features, const LocalMap& map,
                                         const Pose& initial, const OdometryParams& params);

/// Frame-to-frame driver: prediction, registration, local map upkeep.
class Odometry {
 public:
  explicit Odometry(OdometryParams params);

  /// The first frame is pinned to identity and seeds the map.
  PoseEstimate process(const FeatureSet& features);

  [[nodiscard]] const LocalMap& local_map() const { return map_; }
  [[nodiscard]] const OdometryParams& params() const { return params_; }

 private:
  OdometryParams params_;
  LocalMap map_;
  std::array<Pose, 2> last_{};
  std::size_t frames_ = 0;
};

}  // namespace solidslam
