#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "solidslam/se3.hpp"
#include "solidslam/types.hpp"

namespace solidslam {

struct TimedPose {
  double timestamp = 0.0;  ///< seconds
  Pose pose;
};

/// Poses with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;

  /// Throws ValidationError if `timestamp` does not exceed the last one.
  void push_back(double timestamp, const Pose& pose);

  [[nodiscard]] std::size_t size() const { return poses_.size(); }
  [[nodiscard]] bool empty() const { return poses_.empty(); }
  [[nodiscard]] const TimedPose& operator[](std::size_t i) const { return poses_[i]; }
  [[nodiscard]] const TimedPose& front() const { return poses_.front(); }
  [[nodiscard]] const TimedPose& back() const { return poses_.back(); }
  [[nodiscard]] auto begin() const { return poses_.begin(); }
  [[nodiscard]] auto end() const { return poses_.end(); }

 private:
  std::vector<TimedPose> poses_;
};

struct ScanFrame {
  PointCloud cloud;
  /// From the "# TIMESTAMP" header comment, when present.
  std::optional<double> timestamp;
  std::size_t skipped_nonfinite = 0;
};

/// ASCII PCD: header with at least "FIELDS x y z ...", "POINTS n" and
/// "DATA ascii", then n rows whose first three columns are x y z.
/// Rows containing non-finite values are skipped and counted.
[[nodiscard]] ScanFrame read_pointcloud(const std::filesystem::path& path);
[[nodiscard]] ScanFrame parse_pointcloud(const std::string& text);

/// Shortest round-trip decimals, so reading back reproduces every bit.
void write_pointcloud(const std::filesystem::path& path, const PointCloud& cloud,
                      std::optional<double> timestamp = std::nullopt);
[[nodiscard]] std::string format_pointcloud(const PointCloud& cloud,
                                            std::optional<double> timestamp = std::nullopt);

/// "timestamp tx ty tz qx qy qz qw": timestamp with 9 decimals, the rest with
/// 9 significant digits, unit quaternion with qw >= 0.
[[nodiscard]] std::string format_pose_line(double timestamp, const Pose& pose);

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
[[nodiscard]] Trajectory read_trajectory(const std::filesystem::path& path);
[[nodiscard]] Trajectory parse_trajectory(const std::string& text);

/// Ordered frame source over a dataset directory: `*.pcd` files in
/// lexicographic order plus an optional groundtruth.txt.
class Playback {
 public:
  /// Throws EmptyDataset when the directory holds no frames.
  explicit Playback(const std::filesystem::path& dir, double fallback_rate = 30.0);

  [[nodiscard]] std::size_t size() const { return files_.size(); }
  [[nodiscard]] const std::vector<std::filesystem::path>& files() const { return files_; }

  /// Next frame, or nullopt at the end. Frames without a timestamp header
  /// are stamped index / fallback_rate.
  [[nodiscard]] std::optional<ScanFrame> next();

  [[nodiscard]] std::optional<Trajectory> groundtruth() const;

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  std::size_t cursor_ = 0;
  double fallback_rate_;
};

inline constexpr const char* kGroundTruthFile = "groundtruth.txt";

[[nodiscard]] std::string frame_filename(std::size_t index);

/// Whole file into a string; throws IoError.
[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace solidslam
