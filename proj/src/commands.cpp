#include "solidslam/commands.hpp"

#include <cstdio>

#include "solidslam/config.hpp"
#include "solidslam/pipeline.hpp"
#include "solidslam/sim.hpp"

namespace solidslam {

namespace {

constexpr double kRotationPeakRate = 1.57;
constexpr double kRotationDuration = 3.5;

Config load_or_default(const std::optional<std::filesystem::path>& path) {
  return path ? load_config(*path) : Config{};
}

}  // namespace

int cmd_sim(const SimOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    Config config = load_or_default(opts.config);
    if (opts.seed) config.sim.seed = *opts.seed;
    if (opts.max_frames) config.run.max_frames = *opts.max_frames;
    config.validate();

    const Scene scene = opts.scene ? read_scene(*opts.scene) : Scene::default_room();
    Trajectory waypoints;
    if (opts.trajectory == "loop") {
      waypoints = default_loop_waypoints();
    } else if (opts.trajectory == "rotation") {
      waypoints = rotation_test_waypoints(config.sim.seed, kRotationPeakRate, kRotationDuration,
                                          config.sim.rate);
    } else {
      waypoints = read_trajectory(opts.trajectory);
    }
    if (waypoints.empty()) throw ValidationError("trajectory", "no waypoints");

    ScanSpec spec;
    spec.sensor = config.sensor.spec();
    spec.rays_vertical = config.sim.rays_vertical;
    spec.rays_horizontal = config.sim.rays_horizontal;
    spec.noise_sigma = config.sim.noise_sigma;
    spec.seed = config.sim.seed;

    const Trajectory gt =
        generate_sequence(scene, waypoints, config.sim.rate, spec, opts.out, config.run.max_frames);
    out << "frames = " << gt.size() << "\n";
    out << "dataset = " << opts.out.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "sim: " << e.what() << "\n";
    return kExitInvalid;
  }
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  RunReport report;
  try {
    Config config = load_or_default(opts.config);
    if (opts.occupancy_threshold) config.mapping.occupancy_threshold = *opts.occupancy_threshold;
    if (opts.max_frames) config.run.max_frames = *opts.max_frames;
    config.validate();
    report = run_dataset(opts.dataset, config, opts.out, opts.verbose ? &err : nullptr);
  } catch (const Error& e) {
    err << "run: " << e.what() << "\n";
    return kExitInvalid;
  }
  out << report.format();
  if (static_cast<double>(report.low_confidence) >
      kLowConfidenceLimit * static_cast<double>(report.frames)) {
    err << "run: " << report.low_confidence << " of " << report.frames
        << " frames are low-confidence\n";
    return kExitLowConfidence;
  }
  return kExitOk;
}

int cmd_eval(const std::filesystem::path& estimated, const std::filesystem::path& ground_truth,
             std::ostream& out, std::ostream& err) {
  Trajectory est;
  Trajectory gt;
  try {
    est = read_trajectory(estimated);
    gt = read_trajectory(ground_truth);
  } catch (const Error& e) {
    err << "eval: " << e.what() << "\n";
    return kExitInvalid;
  }
  try {
    const AteResult res = ate(est, gt);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "ate_rmse = %.9g\nate_max = %.9g\nposes = %zu\n", res.rmse,
                  res.max, res.pairs);
    out << buf;
    return kExitOk;
  } catch (const InsufficientOverlap& e) {
    err << "eval: " << e.what() << "\n";
    return kExitNoOverlap;
  }
}

}  // namespace solidslam
