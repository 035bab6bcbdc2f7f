#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "solidslam/types.hpp"

namespace solidslam {

/// Forward-looking pyramid sensor. Angles follow the grid projection:
///   alpha = atan(y / x)  -> rows (M "vertical" sectors)
///   theta = atan(z / x)  -> columns (N "horizontal" sectors)
/// With x forward, y left and z up, alpha therefore spans the sensor's wide
/// (70 deg) side and theta the narrow (55 deg) side for the L515 defaults.
struct SensorSpec {
  double alpha_min = 0.0;  ///< radians
  double alpha_max = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double alpha_res = 0.0;  ///< angular resolution, radians
  double theta_res = 0.0;
  double range_min = 0.0;  ///< meters
  double range_max = 0.0;
  /// Fraction of range_max trimmed off the far end by filter_range().
  double range_margin = 0.02;
  /// Caps on M and N.
  int max_rows = 200;
  int max_cols = 200;

  /// Intel L515: 70 x 55 deg FoV, 0.07 deg resolution, 0.25-9 m.
  [[nodiscard]] static SensorSpec l515();

  /// Throws ValidationError on a violated precondition.
  void validate() const;

  /// M = floor((alpha_max - alpha_min) / (2 alpha_res)), capped at max_rows.
  [[nodiscard]] int rows() const;
  /// N = floor((theta_max - theta_min) / (2 theta_res)), capped at max_cols.
  [[nodiscard]] int cols() const;

  [[nodiscard]] double max_accepted_range() const { return range_max * (1.0 - range_margin); }
};

struct Cell {
  Point3 mean = Point3::Zero();
  int count = 0;
};

/// M x N projection of a scan, row-major. A cell is occupied iff count > 0.
struct CellGrid {
  int rows = 0;
  int cols = 0;
  std::vector<Cell> cells;
  std::vector<std::optional<double>> smoothness;

  CellGrid() = default;
  CellGrid(int m, int n)
      : rows(m), cols(n), cells(static_cast<std::size_t>(m) * n),
        smoothness(static_cast<std::size_t>(m) * n) {}

  [[nodiscard]] std::size_t index(int m, int n) const {
    return static_cast<std::size_t>(m) * cols + n;
  }
  [[nodiscard]] const Cell& at(int m, int n) const { return cells[index(m, n)]; }
  [[nodiscard]] Cell& at(int m, int n) { return cells[index(m, n)]; }
  [[nodiscard]] bool occupied(int m, int n) const { return at(m, n).count > 0; }
  [[nodiscard]] const std::optional<double>& sigma(int m, int n) const {
    return smoothness[index(m, n)];
  }
  [[nodiscard]] std::size_t occupied_count() const;
};

struct FeatureSet {
  PointCloud edges;
  PointCloud planars;
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  /// Set when edges < 10 or planars < 30. Warning only.
  bool insufficient = false;
};

struct ExtractionParams {
  int lambda = 2;
  /// Minimum occupied neighbors in the window; unset means (2 lambda + 1)^2 / 2.
  std::optional<int> min_neighbors;
  double sigma_edge = 0.05;
  double sigma_plane = 0.01;
  int max_edges = 150;
  int max_planars = 400;

  void validate() const;
  [[nodiscard]] int effective_min_neighbors() const;

  bool operator==(const ExtractionParams&) const = default;
};

inline constexpr std::size_t kMinEdgeFeatures = 10;
inline constexpr std::size_t kMinPlanarFeatures = 30;

/// Keeps finite points with range_min <= |p| <= range_max (1 - margin).
[[nodiscard]] PointCloud filter_range(const PointCloud& cloud, const SensorSpec& spec);

/// Returns (alpha, theta) = (atan(y/x), atan(z/x)). Throws DegeneratePoint for x = 0.
[[nodiscard]] std::pair<double, double> compute_angles(const Point3& p);

/// Bins points into the M x N grid by equal division of the angular ranges.
/// Points with x <= 0 or outside the FoV are dropped.
[[nodiscard]] CellGrid project_to_grid(const PointCloud& cloud, const SensorSpec& spec);

/// sigma(m,n) = 1/lambda^2 * sum over occupied window cells of (|p_ij| - |p_mn|).
/// Cells with fewer than `min_neighbors` occupied neighbors get no value.
[[nodiscard]] CellGrid compute_smoothness(const CellGrid& grid, int lambda, int min_neighbors);
[[nodiscard]] CellGrid compute_smoothness(const CellGrid& grid, int lambda);

[[nodiscard]] FeatureSet classify_features(const CellGrid& grid, double sigma_edge,
                                           double sigma_plane, int max_edges, int max_planars);

/// filter_range -> project_to_grid -> compute_smoothness -> classify_features.
[[nodiscard]] FeatureSet extract_features(const PointCloud& cloud, const SensorSpec& spec,
                                          const ExtractionParams& params,
                                          std::size_t frame_index = 0, double timestamp = 0.0);

}  // namespace solidslam
