#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "solidslam/features.hpp"
#include "solidslam/mapping.hpp"
#include "solidslam/odometry.hpp"

namespace solidslam {

/// [sensor] section. Angles are kept in degrees, as written in the file.
struct SensorConfig {
  double alpha_min_deg = -35.0;
  double alpha_max_deg = 35.0;
  double theta_min_deg = -27.5;
  double theta_max_deg = 27.5;
  double alpha_res_deg = 0.07;
  double theta_res_deg = 0.07;
  double range_min = 0.25;
  double range_max = 9.0;
  double range_margin = 0.02;
  int max_vertical_sectors = 200;
  int max_horizontal_sectors = 200;

  [[nodiscard]] SensorSpec spec() const;
  bool operator==(const SensorConfig&) const = default;
};

/// [mapping] section.
struct MappingConfig {
  OccupancyParams occupancy;
  double keyframe_min_translation = 0.3;
  double keyframe_min_rotation_deg = 15.0;
  double keyframe_max_interval = 1.0;
  double occupancy_threshold = 0.6;

  [[nodiscard]] KeyframePolicy keyframe_policy() const;
  bool operator==(const MappingConfig&) const = default;
};

/// [sim] section.
struct SimConfig {
  int rays_vertical = 400;
  int rays_horizontal = 400;
  double noise_sigma = 0.014;
  std::uint64_t seed = 1;
  double rate = 30.0;

  bool operator==(const SimConfig&) const = default;
};

/// [run] section.
struct RunConfig {
  std::size_t max_frames = 0;  ///< 0 = all

  bool operator==(const RunConfig&) const = default;
};

/// Every tunable of the toolkit. Absent keys keep these defaults.
struct Config {
  SensorConfig sensor;
  ExtractionParams extraction;
  OdometryParams odometry;
  MappingConfig mapping;
  SimConfig sim;
  RunConfig run;

  /// Throws ValidationError naming the first offending key.
  void validate() const;
  bool operator==(const Config&) const = default;
};

/// INI-style text: "[section]" headers, "key = value" lines, '#' or ';'
/// comments. Unknown sections or keys raise ValidationError.
[[nodiscard]] Config parse_config(const std::string& text);
[[nodiscard]] Config load_config(const std::filesystem::path& path);

/// Writes every key; parse_config(serialize_config(c)) == c.
[[nodiscard]] std::string serialize_config(const Config& config);

}  // namespace solidslam
