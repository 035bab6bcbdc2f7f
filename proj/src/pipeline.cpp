#include "solidslam/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "solidslam/sim.hpp"

namespace solidslam {

namespace fs = std::filesystem;

SlamPipeline::SlamPipeline(const Config& config, std::ostream* log)
    : config_(config),
      sensor_(config.sensor.spec()),
      keyframe_policy_(config.mapping.keyframe_policy()),
      log_(log),
      odometry_(config.odometry),
      map_(config.mapping.occupancy) {
  config_.validate();
}

FrameResult SlamPipeline::process(const PointCloud& cloud, double timestamp) {
  const auto start = std::chrono::steady_clock::now();

  FrameResult res;
  res.index = frames_;
  const FeatureSet features =
      extract_features(cloud, sensor_, config_.extraction, frames_, timestamp);
  res.estimate = odometry_.process(features);
  res.pose = res.estimate.pose;
  trajectory_.push_back(timestamp, res.pose);

  res.keyframe = !last_keyframe_ ||
                 is_keyframe(last_keyframe_->pose.inverse() * res.pose,
                             timestamp - last_keyframe_->timestamp, keyframe_policy_);
  if (res.keyframe) {
    map_.integrate_scan(filter_range(cloud, sensor_), res.pose);
    last_keyframe_ = TimedPose{timestamp, res.pose};
    ++keyframes_;
  }
  if (res.estimate.degenerate) ++low_confidence_;

  res.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  total_latency_ms_ += res.latency_ms;
  max_latency_ms_ = std::max(max_latency_ms_, res.latency_ms);
  ++frames_;

  if (log_) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "frame=%zu iterations=%d cost=%.6g edge_inliers=%zu plane_inliers=%zu "
                  "keyframe=%d degenerate=%d elapsed_ms=%.3f\n",
                  res.index, res.estimate.iterations, res.estimate.final_cost,
                  res.estimate.edge_inliers, res.estimate.plane_inliers, res.keyframe ? 1 : 0,
                  res.estimate.degenerate ? 1 : 0, res.latency_ms);
    *log_ << buf;
  }
  return res;
}

double SlamPipeline::mean_latency_ms() const {
  return frames_ == 0 ? 0.0 : total_latency_ms_ / static_cast<double>(frames_);
}

std::string RunReport::format() const {
  char buf[128];
  std::string out;
  const auto line = [&](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  line("frames", std::to_string(frames));
  line("keyframes", std::to_string(keyframes));
  line("low_confidence_frames", std::to_string(low_confidence));
  line("mean_latency_ms", num(mean_latency_ms));
  line("max_latency_ms", num(max_latency_ms));
  line("map_leaves", std::to_string(map_leaves));
  line("trajectory", trajectory_path.string());
  line("map", map_path.string());
  if (ate_rmse) line("ate_rmse", num(*ate_rmse));
  if (ate_max) line("ate_max", num(*ate_max));
  return out;
}

RunReport run_dataset(const fs::path& dataset, const Config& config, const fs::path& out_dir,
                      std::ostream* log) {
  Playback playback(dataset, config.sim.rate);
  SlamPipeline pipeline(config, log);
  while (config.run.max_frames == 0 || pipeline.frames() < config.run.max_frames) {
    auto frame = playback.next();
    if (!frame) break;
    pipeline.process(frame->cloud, *frame->timestamp);
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  RunReport report;
  report.frames = pipeline.frames();
  report.keyframes = pipeline.keyframes();
  report.low_confidence = pipeline.low_confidence();
  report.mean_latency_ms = pipeline.mean_latency_ms();
  report.max_latency_ms = pipeline.max_latency_ms();
  report.trajectory_path = out_dir / "trajectory.txt";
  report.map_path = out_dir / "map.pcd";

  write_trajectory(pipeline.trajectory(), report.trajectory_path);
  const PointCloud occupied = pipeline.map().export_occupied(config.mapping.occupancy_threshold);
  report.map_leaves = occupied.size();
  write_pointcloud(report.map_path, occupied);

  if (const auto gt = playback.groundtruth()) {
    try {
      const AteResult a = ate(pipeline.trajectory(), *gt);
      report.ate_rmse = a.rmse;
      report.ate_max = a.max;
    } catch (const InsufficientOverlap&) {
      // Reported without ATE.
    }
  }
  write_text(out_dir / "report.txt", report.format());
  return report;
}

}  // namespace solidslam
