#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>

#include "solidslam/config.hpp"
#include "solidslam/io.hpp"
#include "solidslam/mapping.hpp"
#include "solidslam/odometry.hpp"

namespace solidslam {

struct FrameResult {
  std::size_t index = 0;
  Pose pose;
  PoseEstimate estimate;
  bool keyframe = false;
  double latency_ms = 0.0;
};

/// Extraction -> odometry -> keyframe-gated occupancy mapping, one frame at a
/// time.
class SlamPipeline {
 public:
  explicit SlamPipeline(const Config& config, std::ostream* log = nullptr);

  FrameResult process(const PointCloud& cloud, double timestamp);

  [[nodiscard]] const Trajectory& trajectory() const { return trajectory_; }
  [[nodiscard]] const OccupancyOctree& map() const { return map_; }
  [[nodiscard]] std::size_t frames() const { return frames_; }
  [[nodiscard]] std::size_t keyframes() const { return keyframes_; }
  [[nodiscard]] std::size_t low_confidence() const { return low_confidence_; }
  [[nodiscard]] double mean_latency_ms() const;
  [[nodiscard]] double max_latency_ms() const { return max_latency_ms_; }

 private:
  Config config_;
  SensorSpec sensor_;
  KeyframePolicy keyframe_policy_;
  std::ostream* log_;
  Odometry odometry_;
  OccupancyOctree map_;
  Trajectory trajectory_;
  std::optional<TimedPose> last_keyframe_;
  std::size_t frames_ = 0;
  std::size_t keyframes_ = 0;
  std::size_t low_confidence_ = 0;
  double total_latency_ms_ = 0.0;
  double max_latency_ms_ = 0.0;
};

struct RunReport {
  std::size_t frames = 0;
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;
  std::size_t keyframes = 0;
  std::size_t low_confidence = 0;
  std::size_t map_leaves = 0;
  std::filesystem::path trajectory_path;
  std::filesystem::path map_path;
  std::optional<double> ate_rmse;
  std::optional<double> ate_max;

  /// "key = value" lines.
  [[nodiscard]] std::string format() const;
};

/// Plays a dataset directory through the pipeline and writes trajectory.txt,
/// map.pcd and report.txt into `out_dir`.
RunReport run_dataset(const std::filesystem::path& dataset, const Config& config,
                      const std::filesystem::path& out_dir, std::ostream* log = nullptr);

inline constexpr double kLowConfidenceLimit = 0.2;

}  // namespace solidslam
