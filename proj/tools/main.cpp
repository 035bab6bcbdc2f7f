#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "solidslam/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Solid-state LiDAR odometry and mapping toolkit"};
  app.require_subcommand(1);

  solidslam::SimOptions sim;
  std::string sim_scene;
  std::string sim_config;
  std::uint64_t sim_seed = 0;
  std::size_t sim_max_frames = 0;
  auto* sim_cmd = app.add_subcommand("sim", "Generate a synthetic dataset");
  sim_cmd->add_option("--scene", sim_scene, "Scene file (default: built-in room)");
  sim_cmd->add_option("--trajectory", sim.trajectory,
                      "Waypoint file, or built-in 'loop' / 'rotation'");
  sim_cmd->add_option("--out", sim.out, "Output dataset directory")->required();
  auto* sim_config_opt = sim_cmd->add_option("--config", sim_config, "Config file");
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "Noise seed");
  auto* sim_max_opt = sim_cmd->add_option("--max-frames", sim_max_frames, "Frame cap (0 = all)");

  solidslam::RunOptions run;
  std::string run_config;
  double run_threshold = 0.6;
  std::size_t run_max_frames = 0;
  auto* run_cmd = app.add_subcommand("run", "Run odometry and mapping over a dataset");
  run_cmd->add_option("dataset", run.dataset, "Dataset directory")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  auto* run_config_opt = run_cmd->add_option("--config", run_config, "Config file");
  auto* run_threshold_opt = run_cmd->add_option("--occupancy-threshold", run_threshold,
                                                "Export threshold (default 0.6)");
  auto* run_max_opt = run_cmd->add_option("--max-frames", run_max_frames, "Frame cap (0 = all)");
  run_cmd->add_flag("-v,--verbose", run.verbose, "Per-frame log lines on stderr");

  std::string eval_est;
  std::string eval_gt;
  auto* eval_cmd = app.add_subcommand("eval", "ATE of an estimate against ground truth");
  eval_cmd->add_option("estimated", eval_est, "Estimated trajectory")->required();
  eval_cmd->add_option("groundtruth", eval_gt, "Ground-truth trajectory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return solidslam::kExitInvalid;
  }

  if (sim_cmd->parsed()) {
    if (!sim_scene.empty()) sim.scene = sim_scene;
    if (*sim_config_opt) sim.config = sim_config;
    if (*sim_seed_opt) sim.seed = sim_seed;
    if (*sim_max_opt) sim.max_frames = sim_max_frames;
    return solidslam::cmd_sim(sim, std::cout, std::cerr);
  }
  if (run_cmd->parsed()) {
    if (*run_config_opt) run.config = run_config;
    if (*run_threshold_opt) run.occupancy_threshold = run_threshold;
    if (*run_max_opt) run.max_frames = run_max_frames;
    return solidslam::cmd_run(run, std::cout, std::cerr);
  }
  return solidslam::cmd_eval(eval_est, eval_gt, std::cout, std::cerr);
}
