#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"
#include "solidslam/mapping.hpp"

using namespace solidslam;
using Eigen::Vector3d;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

OccupancyParams at_resolution(double r) {
  OccupancyParams p;
  p.resolution = r;
  return p;
}

// Leaves visited by dense sampling of the open segment, minus the end leaf.
std::set<std::uint64_t> sampled_leaves(const OccupancyOctree& tree, const Point3& a,
                                       const Point3& b) {
  std::set<std::uint64_t> out;
  const int steps = 200000;
  for (int i = 0; i <= steps; ++i) {
    LeafKey k;
    if (tree.key_of(a + (b - a) * (static_cast<double>(i) / steps), k)) out.insert(k.packed());
  }
  LeafKey end;
  if (tree.key_of(b, end)) out.erase(end.packed());
  return out;
}

}  // namespace

TEST(Keyframe, Examples) {
  const KeyframePolicy policy;
  EXPECT_FALSE(is_keyframe(Pose::identity(), 0.0, policy));
  EXPECT_TRUE(is_keyframe(Pose::from_translation({0.5, 0, 0}), 0.0, policy));
  EXPECT_TRUE(is_keyframe(Pose::identity(), 1.5, policy));
}

TEST(Keyframe, Thresholds) {
  const KeyframePolicy policy;
  EXPECT_FALSE(is_keyframe(Pose::from_translation({0.29, 0, 0}), 0.99, policy));
  EXPECT_TRUE(is_keyframe(Pose::from_translation({0.3, 0, 0}), 0.0, policy));
  EXPECT_FALSE(is_keyframe(Pose::from_axis_angle(Vector3d::UnitY(), 14 * kDeg), 0.0, policy));
  EXPECT_TRUE(is_keyframe(Pose::from_axis_angle(Vector3d::UnitY(), 16 * kDeg), 0.0, policy));
  EXPECT_TRUE(is_keyframe(Pose::identity(), 1.0, policy));
  KeyframePolicy bad;
  bad.max_interval = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Fuse, Examples) {
  EXPECT_DOUBLE_EQ(fuse_occupancy(0.3, 0.5, 0.5), 0.3);
  EXPECT_DOUBLE_EQ(fuse_occupancy(0.5, 0.7, 0.5), 0.7);
  EXPECT_NEAR(fuse_occupancy(0.7, 0.7, 0.5), 49.0 / 58.0, 1e-15);
}

TEST(Fuse, MatchesOddsProduct) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int i = 0; i < 100000; ++i) {
    const double prev = u(rng);
    const double meas = u(rng);
    const double prior = u(rng);
    ASSERT_NEAR(fuse_occupancy(prev, meas, prior),
                oracle::bayes_odds(prev, meas, prior, 0.12, 0.97), 1e-12)
        << prev << " " << meas << " " << prior;
  }
}

TEST(Fuse, Monotone) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.12, 0.97);
  std::uniform_real_distribution<double> hi(0.5, 0.999);
  std::uniform_real_distribution<double> lo(0.001, 0.5);
  for (int i = 0; i < 10000; ++i) {
    const double p = u(rng);
    EXPECT_GE(fuse_occupancy(p, hi(rng), 0.5), p - 1e-15);
    EXPECT_LE(fuse_occupancy(p, lo(rng), 0.5), p + 1e-15);
  }
}

TEST(Fuse, Clamped) {
  EXPECT_EQ(fuse_occupancy(0.97, 0.99, 0.5), 0.97);
  EXPECT_EQ(fuse_occupancy(0.12, 0.01, 0.5), 0.12);
}

TEST(Octree, FreshTreeReadsPrior) {
  const OccupancyOctree tree;
  EXPECT_EQ(tree.query({1, 2, 3}), 0.5);
  EXPECT_TRUE(tree.export_occupied(0.6).empty());
  EXPECT_EQ(tree.leaf_count(), 0u);
}

TEST(Octree, EmptyScanUpdatesNothing) {
  OccupancyOctree tree;
  EXPECT_EQ(tree.integrate_scan({}, Pose::identity()), 0u);
  EXPECT_EQ(tree.leaf_count(), 0u);
}

TEST(Octree, SinglePointOneMeterAhead) {
  OccupancyOctree tree(at_resolution(0.1));
  const Point3 end(1.0, 0.0, 0.0);
  const std::size_t updates = tree.integrate_scan({end}, Pose::identity());
  const auto expected = sampled_leaves(tree, Point3::Zero(), end);
  EXPECT_GE(expected.size(), 9u);
  EXPECT_LE(expected.size(), 11u);
  EXPECT_EQ(updates, expected.size() + 1);
  EXPECT_DOUBLE_EQ(tree.query(end), 0.7);
  for (const auto& k : tree.ray_keys(Point3::Zero(), end)) {
    EXPECT_TRUE(expected.count(k.packed()));
    EXPECT_DOUBLE_EQ(tree.query(tree.center_of(k)), 0.4);
  }
}

TEST(Octree, RayKeysMatchDenseSampling) {
  const OccupancyOctree tree(at_resolution(0.1));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Point3 a(u(rng), u(rng), u(rng));
    const Point3 b(u(rng), u(rng), u(rng));
    std::set<std::uint64_t> got;
    for (const auto& k : tree.ray_keys(a, b)) got.insert(k.packed());
    const auto expected = sampled_leaves(tree, a, b);
    // Dense sampling can only miss leaves clipped by a sliver.
    for (auto k : expected) EXPECT_TRUE(got.count(k));
    EXPECT_LE(got.size(), expected.size() + 2);
  }
}

TEST(Octree, RepeatedScanFusesTwice) {
  OccupancyOctree tree;
  const PointCloud scan{{1.0, 0.2, -0.1}, {2.0, -0.5, 0.3}};
  const Pose pose = Pose::from_translation({0.3, 0.1, 0.0});
  tree.integrate_scan(scan, pose);
  tree.integrate_scan(scan, pose);
  const double expected = fuse_occupancy(fuse_occupancy(0.5, 0.7, 0.5), 0.7, 0.5);
  EXPECT_NEAR(tree.query(pose * scan[0]), expected, 1e-12);
  EXPECT_NEAR(tree.query(pose * scan[1]), expected, 1e-12);
}

TEST(Octree, HitBeatsMissWithinAScan) {
  OccupancyOctree tree(at_resolution(0.1));
  // The second ray passes through the first point's leaf.
  tree.integrate_scan({{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}}, Pose::identity());
  EXPECT_DOUBLE_EQ(tree.query({1.0, 0.0, 0.0}), 0.7);
  EXPECT_DOUBLE_EQ(tree.query({1.5, 0.0, 0.0}), 0.4);
}

TEST(Octree, QueryAfterHitAndLeafQuantization) {
  OccupancyOctree tree(at_resolution(0.1));
  tree.update({0.51, 0.51, 0.51}, 0.7);
  EXPECT_DOUBLE_EQ(tree.query({0.51, 0.51, 0.51}), fuse_occupancy(0.5, 0.7, 0.5));
  EXPECT_EQ(tree.query({0.52, 0.58, 0.53}), tree.query({0.51, 0.51, 0.51}));
}

TEST(Octree, ExportThresholds) {
  OccupancyOctree tree(at_resolution(0.1));
  tree.update({0.51, 0.51, 0.51}, 0.7);
  const PointCloud occupied = tree.export_occupied(0.6);
  ASSERT_EQ(occupied.size(), 1u);
  EXPECT_LT((occupied[0] - Point3(0.55, 0.55, 0.55)).norm(), 1e-12);
  EXPECT_TRUE(tree.export_occupied(0.99).empty());
}

TEST(Octree, CenterOfIsInsideItsLeaf) {
  const OccupancyOctree tree(at_resolution(0.05));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const Point3 p(u(rng), u(rng), u(rng));
    LeafKey k;
    ASSERT_TRUE(tree.key_of(p, k));
    const Point3 c = tree.center_of(k);
    EXPECT_LE((c - p).cwiseAbs().maxCoeff(), 0.025 + 1e-9);
    LeafKey back;
    ASSERT_TRUE(tree.key_of(c, back));
    EXPECT_EQ(back, k);
  }
}

TEST(Octree, OrderInvariantInsideClampBand) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.45, 0.55);
  std::vector<double> meas(40);
  for (auto& m : meas) m = u(rng);
  const Point3 p(0.3, -0.2, 0.7);
  OccupancyOctree ref;
  for (double m : meas) ref.update(p, m);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(meas.begin(), meas.end(), rng);
    OccupancyOctree tree;
    for (double m : meas) tree.update(p, m);
    EXPECT_NEAR(tree.query(p), ref.query(p), 1e-12);
  }
}

TEST(Octree, ProbabilitiesStayInClampBand) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> m(0.01, 0.99);
  std::uniform_int_distribution<int> cell(0, 9);
  OccupancyOctree tree(at_resolution(0.1));
  std::size_t updates = 0;
  for (int i = 0; i < 20000; ++i) {
    tree.update({0.1 * cell(rng) + 0.05, 0.05, 0.1 * cell(rng) + 0.05}, m(rng));
    ++updates;
  }
  for (int x = 0; x < 10; ++x) {
    for (int z = 0; z < 10; ++z) {
      const double p = tree.query({0.1 * x + 0.05, 0.05, 0.1 * z + 0.05});
      EXPECT_GE(p, 0.12 - 1e-12);
      EXPECT_LE(p, 0.97 + 1e-12);
    }
  }
  EXPECT_LE(tree.node_count(), updates * OccupancyOctree::kDepth);
  EXPECT_EQ(tree.leaf_count(), 100u);
}

TEST(Octree, ParamsValidated) {
  OccupancyParams p;
  p.p_min = 0.6;
  EXPECT_THROW(OccupancyOctree{p}, ValidationError);
  p = OccupancyParams{};
  p.resolution = 0.0;
  EXPECT_THROW(OccupancyOctree{p}, ValidationError);
}
