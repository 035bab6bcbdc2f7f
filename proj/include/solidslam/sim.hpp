#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "solidslam/features.hpp"
#include "solidslam/io.hpp"
#include "solidslam/se3.hpp"

namespace solidslam {

/// Axis-aligned box. Rays starting inside see its inner faces, which is how
/// rooms are modelled.
struct Box {
  std::string id;
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

/// Finite rectangle: center, unit normal, in-plane axis u and half extents
/// along u and v = normal x u.
struct Rect {
  std::string id;
  Point3 center = Point3::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  double half_u = 0.0;
  double half_v = 0.0;
};

struct Scene {
  std::vector<Box> boxes;
  std::vector<Rect> planes;

  /// Positive extents, unit-length orthogonal plane axes, unique ids.
  void validate() const;
  [[nodiscard]] bool empty() const { return boxes.empty() && planes.empty(); }
  [[nodiscard]] const Box* find_box(const std::string& id) const;

  /// 4 x 4 x 2.5 m room with two machine-sized boxes.
  [[nodiscard]] static Scene default_room();
};

/// Line-oriented scene text:
///   box   <id> xmin ymin zmin xmax ymax zmax
///   plane <id> cx cy cz nx ny nz ux uy uz half_u half_v
[[nodiscard]] Scene parse_scene(const std::string& text);
[[nodiscard]] Scene read_scene(const std::filesystem::path& path);
[[nodiscard]] std::string format_scene(const Scene& scene);

struct ScanSpec {
  SensorSpec sensor = SensorSpec::l515();
  int rays_vertical = 400;    ///< lattice samples over [alpha_min, alpha_max]
  int rays_horizontal = 400;  ///< lattice samples over [theta_min, theta_max]
  double noise_sigma = 0.014; ///< Gaussian range noise, meters
  std::uint64_t seed = 1;

  void validate() const;
};

/// Distance along a unit ray to the nearest surface, if any.
[[nodiscard]] std::optional<double> intersect(const Scene& scene, const Point3& origin,
                                              const Eigen::Vector3d& dir);

/// Casts the (alpha, theta) lattice from `pose` and returns hits in the sensor
/// frame. The nearest surface must lie in [range_min, range_max] or the ray is
/// a miss. `stream` selects an independent noise stream for the same seed.
[[nodiscard]] PointCloud raycast_scan(const Scene& scene, const Pose& pose, const ScanSpec& spec,
                                      std::uint64_t stream = 0);

/// Pose at time t: linear in translation, slerp in rotation, clamped to the
/// waypoint span.
[[nodiscard]] Pose interpolate(const Trajectory& waypoints, double t);

/// Samples t0 + i / rate for every i with t0 + i / rate <= t_end.
[[nodiscard]] Trajectory resample(const Trajectory& waypoints, double rate);

struct SimFrame {
  double timestamp = 0.0;
  Pose pose;
  PointCloud cloud;
};

/// In-memory sequence; frame i uses noise stream i.
[[nodiscard]] std::vector<SimFrame> simulate_sequence(const Scene& scene,
                                                      const Trajectory& waypoints, double rate,
                                                      const ScanSpec& spec);

/// Writes frame_NNNNNN.pcd files plus groundtruth.txt into `out_dir` and
/// returns the ground-truth trajectory.
Trajectory generate_sequence(const Scene& scene, const Trajectory& waypoints, double rate,
                             const ScanSpec& spec, const std::filesystem::path& out_dir,
                             std::size_t max_frames = 0);

/// 300-frame, 10 s closed loop through the free side of the default room.
/// Starts at an axis-aligned pose on the 5 cm lattice.
[[nodiscard]] Trajectory default_loop_waypoints();

/// In-place random rotation about the start pose with the given peak angular
/// rate, returning to the start orientation at the end.
[[nodiscard]] Trajectory rotation_test_waypoints(std::uint64_t seed, double peak_rate,
                                                 double duration, double rate);

struct AteResult {
  double rmse = 0.0;
  double max = 0.0;
  std::size_t pairs = 0;
};

inline constexpr double kAssociationWindow = 0.010;

/// Absolute trajectory error after nearest-timestamp association (10 ms
/// window) and closed-form rigid alignment of the estimated translations.
/// Throws InsufficientOverlap with fewer than 3 pairs.
[[nodiscard]] AteResult ate(const Trajectory& estimated, const Trajectory& ground_truth);
[[nodiscard]] double ate_rmse(const Trajectory& estimated, const Trajectory& ground_truth);

/// Peak |omega| over consecutive samples of a trajectory, rad/s.
[[nodiscard]] double peak_angular_rate(const Trajectory& traj);

}  // namespace solidslam
