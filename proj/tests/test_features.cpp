#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "solidslam/features.hpp"
#include "solidslam/sim.hpp"

using namespace solidslam;
using Eigen::Vector3d;

namespace {

constexpr double kPi = std::numbers::pi;

// Point at range r along the ray through cell (m, n) center of `spec`.
Point3 cell_point(const SensorSpec& spec, int m, int n, double r) {
  const double a = spec.alpha_min + (m + 0.5) * (spec.alpha_max - spec.alpha_min) / spec.rows();
  const double t = spec.theta_min + (n + 0.5) * (spec.theta_max - spec.theta_min) / spec.cols();
  return r * Vector3d(1.0, std::tan(a), std::tan(t)).normalized();
}

SensorSpec small_spec(int rows, int cols) {
  SensorSpec s = SensorSpec::l515();
  s.max_rows = rows;
  s.max_cols = cols;
  return s;
}

}  // namespace

TEST(SensorSpec, L515GridIsCapped) {
  const SensorSpec s = SensorSpec::l515();
  EXPECT_EQ(s.rows(), 200);  // 70 / 0.14 = 500 before the cap
  EXPECT_EQ(s.cols(), 200);
  SensorSpec wide = s;
  wide.max_rows = 10000;
  wide.max_cols = 10000;
  EXPECT_EQ(wide.rows(), 500);
  EXPECT_EQ(wide.cols(), 392);  // floor(55 / 0.14)
}

TEST(SensorSpec, ValidateRejectsBadBounds) {
  SensorSpec s = SensorSpec::l515();
  s.range_min = 10.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = SensorSpec::l515();
  s.alpha_res = 0.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = SensorSpec::l515();
  std::swap(s.theta_min, s.theta_max);
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(FilterRange, Empty) { EXPECT_TRUE(filter_range({}, SensorSpec::l515()).empty()); }

TEST(FilterRange, MarginAndBounds) {
  const SensorSpec s = SensorSpec::l515();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const PointCloud in{{s.range_max, 0, 0},
                      {0.5 * (s.range_min + s.range_max), 0, 0},
                      {s.range_max * 0.98, 0, 0},
                      {s.range_max * 0.981, 0, 0},
                      {0.2, 0, 0},
                      {nan, 0, 1}};
  const PointCloud out = filter_range(in, s);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], in[1]);
  EXPECT_EQ(out[1], in[2]);
}

TEST(ComputeAngles, Examples) {
  auto [a0, t0] = compute_angles({1, 0, 0});
  EXPECT_EQ(a0, 0.0);
  EXPECT_EQ(t0, 0.0);
  auto [a1, t1] = compute_angles({1, 1, 0});
  EXPECT_DOUBLE_EQ(a1, kPi / 4);
  EXPECT_EQ(t1, 0.0);
  auto [a2, t2] = compute_angles({2, 0, 2});
  EXPECT_EQ(a2, 0.0);
  EXPECT_DOUBLE_EQ(t2, kPi / 4);
  EXPECT_THROW((void)compute_angles({0, 1, 1}), DegeneratePoint);
}

TEST(ProjectToGrid, CenterPointLandsInCenterCell) {
  const SensorSpec s = small_spec(199, 149);
  const CellGrid g = project_to_grid({{2.0, 0.0, 0.0}}, s);
  ASSERT_EQ(g.occupied_count(), 1u);
  // 1-based (ceil(M/2), ceil(N/2))
  const int m = (s.rows() + 1) / 2 - 1;
  const int n = (s.cols() + 1) / 2 - 1;
  EXPECT_EQ(g.at(m, n).count, 1);
  EXPECT_EQ(g.at(m, n).mean, Point3(2.0, 0.0, 0.0));
}

TEST(ProjectToGrid, DuplicatePointsShareCell) {
  const Point3 p(3.0, 0.4, -0.2);
  const CellGrid g = project_to_grid({p, p}, SensorSpec::l515());
  ASSERT_EQ(g.occupied_count(), 1u);
  for (const auto& c : g.cells) {
    if (c.count > 0) {
      EXPECT_EQ(c.count, 2);
      EXPECT_EQ(c.mean, p);
    }
  }
}

TEST(ProjectToGrid, CountsMatchInFovPoints) {
  const SensorSpec s = SensorSpec::l515();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  PointCloud cloud;
  std::size_t in_fov = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point3 p(u(rng), u(rng), u(rng));
    cloud.push_back(p);
    if (p.x() <= 0.0) continue;
    const double a = std::atan(p.y() / p.x());
    const double t = std::atan(p.z() / p.x());
    if (a >= s.alpha_min && a <= s.alpha_max && t >= s.theta_min && t <= s.theta_max) ++in_fov;
  }
  const CellGrid g = project_to_grid(cloud, s);
  std::size_t total = 0;
  for (const auto& c : g.cells) total += static_cast<std::size_t>(c.count);
  EXPECT_EQ(total, in_fov);
  EXPECT_GT(in_fov, 0u);
}

TEST(ProjectToGrid, CellMeanIsCentroid) {
  const SensorSpec s = small_spec(20, 20);
  const Point3 a = cell_point(s, 4, 7, 2.0);
  const Point3 b = cell_point(s, 4, 7, 2.1);
  const Point3 c = cell_point(s, 4, 7, 1.7);
  const CellGrid g = project_to_grid({a, b, c}, s);
  EXPECT_EQ(g.at(4, 7).count, 3);
  EXPECT_LT((g.at(4, 7).mean - (a + b + c) / 3.0).norm(), 1e-15);
}

TEST(Smoothness, ConstantRangeIsZero) {
  const SensorSpec s = small_spec(30, 30);
  PointCloud cloud;
  for (int m = 0; m < 30; ++m) {
    for (int n = 0; n < 30; ++n) cloud.push_back(cell_point(s, m, n, 2.5));
  }
  const CellGrid g = compute_smoothness(project_to_grid(cloud, s), 2);
  EXPECT_FALSE(g.sigma(0, 0).has_value());  // corner window holds only 8 neighbors
  for (int m = 1; m < 29; ++m) {
    for (int n = 1; n < 29; ++n) {
      ASSERT_TRUE(g.sigma(m, n).has_value());
      EXPECT_NEAR(*g.sigma(m, n), 0.0, 1e-12);
    }
  }
}

TEST(Smoothness, LambdaOneCenterNearerThanNeighbors) {
  CellGrid g(3, 3);
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 3; ++n) {
      g.at(m, n).count = 1;
      g.at(m, n).mean = Point3(2.0, 0.0, 0.0);
    }
  }
  g.at(1, 1).mean = Point3(1.0, 0.0, 0.0);
  const CellGrid out = compute_smoothness(g, 1);
  ASSERT_TRUE(out.sigma(1, 1).has_value());
  EXPECT_DOUBLE_EQ(*out.sigma(1, 1), 8.0);
}

TEST(Smoothness, BorderWindowUsesInBoundsCellsOnly) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> r(1.0, 3.0);
  CellGrid g(6, 7);
  for (auto& c : g.cells) {
    c.count = 1;
    c.mean = Point3(r(rng), 0.0, 0.0);
  }
  const int lambda = 2;
  const CellGrid out = compute_smoothness(g, lambda, 0);
  for (int m = 0; m < 6; ++m) {
    for (int n = 0; n < 7; ++n) {
      double sum = 0.0;
      for (int i = m - lambda; i <= m + lambda; ++i) {
        for (int j = n - lambda; j <= n + lambda; ++j) {
          if (i < 0 || j < 0 || i >= 6 || j >= 7) continue;
          sum += g.at(i, j).mean.x() - g.at(m, n).mean.x();
        }
      }
      ASSERT_TRUE(out.sigma(m, n).has_value());
      EXPECT_NEAR(*out.sigma(m, n), sum / (lambda * lambda), 1e-12);
    }
  }
}

TEST(Smoothness, SparseWindowHasNoValue) {
  CellGrid g(5, 5);
  g.at(2, 2) = {Point3(1, 0, 0), 1};
  g.at(2, 3) = {Point3(1.1, 0, 0), 1};
  const CellGrid out = compute_smoothness(g, 2);
  EXPECT_FALSE(out.sigma(2, 2).has_value());
  EXPECT_FALSE(out.sigma(0, 0).has_value());  // unoccupied
  EXPECT_EQ(ExtractionParams{}.effective_min_neighbors(), 12);
}

TEST(Classify, AllZeroSigmaIsPlanar) {
  CellGrid g(10, 10);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    g.cells[i] = {Point3(1.0, 0.01 * static_cast<double>(i), 0.0), 1};
    g.smoothness[i] = 0.0;
  }
  const FeatureSet fs = classify_features(g, 0.05, 0.01, 150, 40);
  EXPECT_TRUE(fs.edges.empty());
  ASSERT_EQ(fs.planars.size(), 40u);
  EXPECT_EQ(fs.planars[0], g.cells[0].mean);  // ties broken by cell index
  EXPECT_EQ(fs.planars[39], g.cells[39].mean);
}

TEST(Classify, SingleHighSigmaCellIsTheOnlyEdge) {
  CellGrid g(10, 10);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    g.cells[i] = {Point3(1.0, 0.01 * static_cast<double>(i), 0.0), 1};
    g.smoothness[i] = 0.0;
  }
  g.smoothness[42] = 10.0;
  const FeatureSet fs = classify_features(g, 0.05, 0.01, 150, 400);
  ASSERT_EQ(fs.edges.size(), 1u);
  EXPECT_EQ(fs.edges[0], g.cells[42].mean);
  EXPECT_EQ(fs.planars.size(), 99u);
}

TEST(Classify, OrderingAndDisjointness) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> s(-0.3, 0.3);
  CellGrid g(20, 20);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    g.cells[i] = {Point3(1.0, 0.001 * static_cast<double>(i), 0.0), 1};
    g.smoothness[i] = s(rng);
  }
  const FeatureSet fs = classify_features(g, 0.05, 0.01, 1000, 1000);
  const auto sigma_of = [&g](const Point3& p) {
    const auto i = static_cast<std::size_t>(std::lround(p.y() / 0.001));
    return *g.smoothness[i];
  };
  for (std::size_t k = 0; k < fs.edges.size(); ++k) {
    EXPECT_GE(sigma_of(fs.edges[k]), 0.05);
    if (k > 0) EXPECT_GE(sigma_of(fs.edges[k - 1]), sigma_of(fs.edges[k]));
  }
  for (std::size_t k = 0; k < fs.planars.size(); ++k) {
    EXPECT_LE(std::abs(sigma_of(fs.planars[k])), 0.01);
    if (k > 0) EXPECT_LE(std::abs(sigma_of(fs.planars[k - 1])), std::abs(sigma_of(fs.planars[k])));
  }
  for (const auto& e : fs.edges) {
    for (const auto& p : fs.planars) EXPECT_NE(e, p);
  }
}

TEST(Classify, InsufficientFlag) {
  CellGrid g(2, 2);
  for (auto& c : g.cells) c = {Point3(1, 0, 0), 1};
  for (auto& s : g.smoothness) s = 0.0;
  EXPECT_TRUE(classify_features(g, 0.05, 0.01, 150, 400).insufficient);
  EXPECT_THROW((void)classify_features(g, 0.01, 0.05, 150, 400), ValidationError);
}

TEST(Extract, ConvexVerticalEdgeGivesTwoCellLines) {
  // A box corner straight ahead: its vertical edge sits on alpha = 0, which
  // is the boundary between the two middle rows of the even grid.
  Scene scene;
  scene.boxes.push_back({"box", {2.0, 2.0, -4.0}, {6.0, 6.0, 4.0}});
  ScanSpec spec;
  spec.noise_sigma = 0.0;
  const Pose pose = Pose::from_axis_angle(Vector3d::UnitZ(), kPi / 4);
  const PointCloud cloud = raycast_scan(scene, pose, spec);
  ASSERT_FALSE(cloud.empty());

  ExtractionParams params;
  params.max_edges = 10000;
  const FeatureSet fs = extract_features(cloud, spec.sensor, params);
  ASSERT_FALSE(fs.edges.empty());
  const int mid = spec.sensor.rows() / 2;
  std::set<int> rows;
  for (const auto& e : fs.edges) {
    const double a = std::atan(e.y() / e.x());
    const int m = static_cast<int>(std::floor((a - spec.sensor.alpha_min) /
                                              (spec.sensor.alpha_max - spec.sensor.alpha_min) *
                                              spec.sensor.rows()));
    rows.insert(m);
  }
  EXPECT_EQ(rows, (std::set<int>{mid - 1, mid}));
  // Both lines are edges across almost every column.
  EXPECT_GE(fs.edges.size(), static_cast<std::size_t>(2 * 0.9 * spec.sensor.cols()));
}

TEST(Extract, FeaturesRespectFovAndRange) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3.0, 10.0);
  PointCloud cloud;
  for (int i = 0; i < 50000; ++i) cloud.emplace_back(u(rng), u(rng) * 0.5, u(rng) * 0.4);
  const SensorSpec s = SensorSpec::l515();
  const FeatureSet fs = extract_features(cloud, s, ExtractionParams{});
  for (const auto* set : {&fs.edges, &fs.planars}) {
    for (const auto& p : *set) {
      EXPECT_GT(p.x(), 0.0);
      const double a = std::atan(p.y() / p.x());
      const double t = std::atan(p.z() / p.x());
      EXPECT_GE(a, s.alpha_min);
      EXPECT_LE(a, s.alpha_max);
      EXPECT_GE(t, s.theta_min);
      EXPECT_LE(t, s.theta_max);
      EXPECT_GE(p.norm(), s.range_min);
      EXPECT_LE(p.norm(), s.max_accepted_range());
    }
  }
}

TEST(Extract, Deterministic) {
  ScanSpec spec;
  const PointCloud cloud =
      raycast_scan(Scene::default_room(), default_loop_waypoints().front().pose, spec, 3);
  const FeatureSet a = extract_features(cloud, spec.sensor, ExtractionParams{}, 4, 0.5);
  const FeatureSet b = extract_features(cloud, spec.sensor, ExtractionParams{}, 4, 0.5);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.planars, b.planars);
  EXPECT_EQ(a.frame_index, 4u);
  EXPECT_EQ(a.timestamp, 0.5);
}

TEST(Extract, SmoothnessInvariantUnderCellPreservingRotation) {
  // A half turn about the boresight maps (alpha, theta) to (-alpha, -theta),
  // i.e. cell (m, n) onto (M-1-m, N-1-n), and keeps every range.
  ScanSpec spec;
  spec.noise_sigma = 0.0;
  const PointCloud cloud =
      raycast_scan(Scene::default_room(), default_loop_waypoints().front().pose, spec);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(kPi, Vector3d::UnitX()).toRotationMatrix();
  PointCloud rotated;
  for (const auto& p : cloud) rotated.push_back(R * p);

  const SensorSpec& s = spec.sensor;
  const CellGrid a = compute_smoothness(project_to_grid(cloud, s), 2);
  const CellGrid b = compute_smoothness(project_to_grid(rotated, s), 2);
  std::size_t compared = 0;
  for (int m = 0; m < a.rows; ++m) {
    for (int n = 0; n < a.cols; ++n) {
      const auto& sa = a.sigma(m, n);
      const auto& sb = b.sigma(a.rows - 1 - m, a.cols - 1 - n);
      ASSERT_EQ(sa.has_value(), sb.has_value());
      if (sa) {
        EXPECT_NEAR(*sa, *sb, 1e-9);
        ++compared;
      }
    }
  }
  EXPECT_GT(compared, 30000u);
}

TEST(Extract, EdgesConsistentUnderSensorRotation) {
  ScanSpec spec;
  spec.noise_sigma = 0.0;
  const Scene scene = Scene::default_room();
  const Pose p1 = default_loop_waypoints().front().pose;
  const Pose rel = Pose::from_axis_angle(Vector3d(0.2, 0.3, 1.0).normalized(), 0.12);
  const Pose p2 = p1 * rel;
  const SensorSpec& s = spec.sensor;
  const FeatureSet f1 = extract_features(raycast_scan(scene, p1, spec), s, ExtractionParams{});
  const FeatureSet f2 = extract_features(raycast_scan(scene, p2, spec), s, ExtractionParams{});

  const double cell = (s.alpha_max - s.alpha_min) / s.rows();
  std::size_t in_overlap = 0;
  std::size_t matched = 0;
  for (const auto& e : f2.edges) {
    const Point3 q = rel * e;  // into frame 1
    if (q.x() <= 0.0) continue;
    const double a = std::atan(q.y() / q.x());
    const double t = std::atan(q.z() / q.x());
    if (a < s.alpha_min || a > s.alpha_max || t < s.theta_min || t > s.theta_max) continue;
    ++in_overlap;
    const double tol = 2.0 * std::sqrt(2.0) * cell * q.norm();
    for (const auto& f : f1.edges) {
      if ((f - q).norm() <= tol) {
        ++matched;
        break;
      }
    }
  }
  ASSERT_GT(in_overlap, 20u);
  EXPECT_GE(static_cast<double>(matched), 0.7 * static_cast<double>(in_overlap));
}
