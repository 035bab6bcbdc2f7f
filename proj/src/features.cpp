#include "solidslam/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace solidslam {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

int sectors(double lo, double hi, double res, int cap) {
  // The epsilon keeps exact ratios such as 70 / 0.14 from flooring to 499.
  const int n = static_cast<int>(std::floor((hi - lo) / (2.0 * res) + 1e-9));
  return std::clamp(n, 1, cap);
}

int bin(double value, double lo, double hi, int count) {
  const int i = static_cast<int>(std::floor((value - lo) / (hi - lo) * count));
  return std::min(i, count - 1);
}

}  // namespace

SensorSpec SensorSpec::l515() {
  SensorSpec s;
  s.alpha_min = -35.0 * kDeg;
  s.alpha_max = 35.0 * kDeg;
  s.theta_min = -27.5 * kDeg;
  s.theta_max = 27.5 * kDeg;
  s.alpha_res = 0.07 * kDeg;
  s.theta_res = 0.07 * kDeg;
  s.range_min = 0.25;
  s.range_max = 9.0;
  return s;
}

void SensorSpec::validate() const {
  const double half_pi = 0.5 * std::numbers::pi;
  if (!(alpha_min < alpha_max)) throw ValidationError("alpha", "alpha_min must be < alpha_max");
  if (!(theta_min < theta_max)) throw ValidationError("theta", "theta_min must be < theta_max");
  if (alpha_min <= -half_pi || alpha_max >= half_pi) {
    throw ValidationError("alpha", "bounds must lie inside (-90, 90) deg");
  }
  if (theta_min <= -half_pi || theta_max >= half_pi) {
    throw ValidationError("theta", "bounds must lie inside (-90, 90) deg");
  }
  if (!(alpha_res > 0.0)) throw ValidationError("alpha_res", "must be > 0");
  if (!(theta_res > 0.0)) throw ValidationError("theta_res", "must be > 0");
  if (!(range_min > 0.0)) throw ValidationError("range_min", "must be > 0");
  if (!(range_min < range_max)) throw ValidationError("range_max", "must be > range_min");
  if (!(range_margin >= 0.0 && range_margin < 1.0)) {
    throw ValidationError("range_margin", "must be in [0, 1)");
  }
  if (max_rows < 1) throw ValidationError("max_rows", "must be >= 1");
  if (max_cols < 1) throw ValidationError("max_cols", "must be >= 1");
}

int SensorSpec::rows() const { return sectors(alpha_min, alpha_max, alpha_res, max_rows); }

int SensorSpec::cols() const { return sectors(theta_min, theta_max, theta_res, max_cols); }

std::size_t CellGrid::occupied_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.count > 0; }));
}

void ExtractionParams::validate() const {
  if (lambda < 1) throw ValidationError("lambda", "must be >= 1");
  if (min_neighbors && *min_neighbors < 0) throw ValidationError("min_neighbors", "must be >= 0");
  if (!(sigma_plane >= 0.0)) throw ValidationError("sigma_plane", "must be >= 0");
  if (!(sigma_plane < sigma_edge)) throw ValidationError("sigma_edge", "must be > sigma_plane");
  if (max_edges < 0) throw ValidationError("max_edges", "must be >= 0");
  if (max_planars < 0) throw ValidationError("max_planars", "must be >= 0");
}

int ExtractionParams::effective_min_neighbors() const {
  if (min_neighbors) return *min_neighbors;
  const int side = 2 * lambda + 1;
  return side * side / 2;
}

PointCloud filter_range(const PointCloud& cloud, const SensorSpec& spec) {
  const double far = spec.max_accepted_range();
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    if (!p.allFinite()) continue;
    const double r = p.norm();
    if (r >= spec.range_min && r <= far) out.push_back(p);
  }
  return out;
}

std::pair<double, double> compute_angles(const Point3& p) {
  if (p.x() == 0.0) {
    throw DegeneratePoint("compute_angles: point has x = 0");
  }
  return {std::atan(p.y() / p.x()), std::atan(p.z() / p.x())};
}

CellGrid project_to_grid(const PointCloud& cloud, const SensorSpec& spec) {
  CellGrid grid(spec.rows(), spec.cols());
  std::vector<Point3> sums(grid.cells.size(), Point3::Zero());

  for (const auto& p : cloud) {
    if (!(p.x() > 0.0) || !p.allFinite()) continue;
    const auto [alpha, theta] = compute_angles(p);
    if (alpha < spec.alpha_min || alpha > spec.alpha_max) continue;
    if (theta < spec.theta_min || theta > spec.theta_max) continue;
    const int m = bin(alpha, spec.alpha_min, spec.alpha_max, grid.rows);
    const int n = bin(theta, spec.theta_min, spec.theta_max, grid.cols);
    const std::size_t i = grid.index(m, n);
    sums[i] += p;
    ++grid.cells[i].count;
  }

  for (std::size_t i = 0; i < sums.size(); ++i) {
    auto& cell = grid.cells[i];
    if (cell.count > 0) cell.mean = sums[i] / static_cast<double>(cell.count);
  }
  return grid;
}

CellGrid compute_smoothness(const CellGrid& grid, int lambda, int min_neighbors) {
  if (lambda < 1) throw ValidationError("lambda", "must be >= 1");

  CellGrid out = grid;
  std::vector<double> ranges(grid.cells.size(), 0.0);
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (grid.cells[i].count > 0) ranges[i] = grid.cells[i].mean.norm();
  }

  const double inv_l2 = 1.0 / (static_cast<double>(lambda) * lambda);
  for (int m = 0; m < grid.rows; ++m) {
    for (int n = 0; n < grid.cols; ++n) {
      const std::size_t c = grid.index(m, n);
      out.smoothness[c].reset();
      if (grid.cells[c].count == 0) continue;

      const double center = ranges[c];
      double sum = 0.0;
      int neighbors = 0;
      for (int i = std::max(0, m - lambda); i <= std::min(grid.rows - 1, m + lambda); ++i) {
        for (int j = std::max(0, n - lambda); j <= std::min(grid.cols - 1, n + lambda); ++j) {
          const std::size_t k = grid.index(i, j);
          if (k == c || grid.cells[k].count == 0) continue;
          sum += ranges[k] - center;
          ++neighbors;
        }
      }
      if (neighbors >= min_neighbors) out.smoothness[c] = sum * inv_l2;
    }
  }
  return out;
}

CellGrid compute_smoothness(const CellGrid& grid, int lambda) {
  ExtractionParams p;
  p.lambda = lambda;
  return compute_smoothness(grid, lambda, p.effective_min_neighbors());
}

FeatureSet classify_features(const CellGrid& grid, double sigma_edge, double sigma_plane,
                             int max_edges, int max_planars) {
  if (!(sigma_plane < sigma_edge)) {
    throw ValidationError("sigma_edge", "must be > sigma_plane");
  }

  std::vector<std::pair<double, std::size_t>> edges;
  std::vector<std::pair<double, std::size_t>> planars;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const auto& s = grid.smoothness[i];
    if (!s || grid.cells[i].count == 0) continue;
    if (*s >= sigma_edge) {
      edges.emplace_back(-*s, i);
    } else if (std::abs(*s) <= sigma_plane) {
      planars.emplace_back(std::abs(*s), i);
    }
  }
  // (key, cell index) pairs: ties resolve by cell index.
  std::sort(edges.begin(), edges.end());
  std::sort(planars.begin(), planars.end());

  FeatureSet out;
  const auto take = [&grid](const auto& ranked, int cap, PointCloud& dst) {
    const std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(std::max(cap, 0)));
    dst.reserve(n);
    for (std::size_t k = 0; k < n; ++k) dst.push_back(grid.cells[ranked[k].second].mean);
  };
  take(edges, max_edges, out.edges);
  take(planars, max_planars, out.planars);
  out.insufficient =
      out.edges.size() < kMinEdgeFeatures || out.planars.size() < kMinPlanarFeatures;
  return out;
}

FeatureSet extract_features(const PointCloud& cloud, const SensorSpec& spec,
                            const ExtractionParams& params, std::size_t frame_index,
                            double timestamp) {
  const CellGrid grid = compute_smoothness(project_to_grid(filter_range(cloud, spec), spec),
                                           params.lambda, params.effective_min_neighbors());
  FeatureSet fs = classify_features(grid, params.sigma_edge, params.sigma_plane,
                                    params.max_edges, params.max_planars);

  // Cell means of points close to range_min can sit marginally inside it.
  const auto out_of_range = [&spec](const Point3& p) {
    const double r = p.norm();
    return r < spec.range_min || r > spec.max_accepted_range();
  };
  std::erase_if(fs.edges, out_of_range);
  std::erase_if(fs.planars, out_of_range);
  fs.insufficient = fs.edges.size() < kMinEdgeFeatures || fs.planars.size() < kMinPlanarFeatures;

  fs.frame_index = frame_index;
  fs.timestamp = timestamp;
  return fs;
}

}  // namespace solidslam
