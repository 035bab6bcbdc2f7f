#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace solidslam {

/// Process exit codes; the only machine-readable contract of the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 2,
  kExitLowConfidence = 3,
  kExitNoOverlap = 4,
};

struct SimOptions {
  std::optional<std::filesystem::path> scene;  ///< default room when unset
  /// Waypoint file in trajectory format, or the built-in "loop" / "rotation".
  std::string trajectory = "loop";
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_frames;
};

struct RunOptions {
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config;
  std::optional<double> occupancy_threshold;
  std::optional<std::size_t> max_frames;
  bool verbose = false;  ///< per-frame log lines on `err`
};

int cmd_sim(const SimOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& estimated, const std::filesystem::path& ground_truth,
             std::ostream& out, std::ostream& err);

}  // namespace solidslam
