#include "solidslam/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace solidslam {

namespace {

constexpr std::int64_t kKeyOffset = std::int64_t{1} << (OccupancyOctree::kDepth - 1);
constexpr std::int64_t kKeyLimit = std::int64_t{1} << OccupancyOctree::kDepth;

int child_slot(const LeafKey& key, int level) {
  const int bit = OccupancyOctree::kDepth - 1 - level;
  return ((key.k[0] >> bit) & 1) | (((key.k[1] >> bit) & 1) << 1) |
         (((key.k[2] >> bit) & 1) << 2);
}

}  // namespace

void KeyframePolicy::validate() const {
  if (!(min_translation > 0.0)) throw ValidationError("keyframe_min_translation", "must be > 0");
  if (!(min_rotation > 0.0)) throw ValidationError("keyframe_min_rotation", "must be > 0");
  if (!(max_interval > 0.0)) throw ValidationError("keyframe_max_interval", "must be > 0");
}

bool is_keyframe(const Pose& delta, double elapsed, const KeyframePolicy& policy) {
  return delta.translation().norm() >= policy.min_translation ||
         delta.angle() >= policy.min_rotation || elapsed >= policy.max_interval;
}

void OccupancyParams::validate() const {
  if (!(resolution > 0.0)) throw ValidationError("resolution", "must be > 0");
  if (!(p_min > 0.0 && p_min < prior)) throw ValidationError("p_min", "must be in (0, prior)");
  if (!(p_max > prior && p_max < 1.0)) throw ValidationError("p_max", "must be in (prior, 1)");
  if (!(p_hit > 0.0 && p_hit < 1.0)) throw ValidationError("p_hit", "must be in (0, 1)");
  if (!(p_miss > 0.0 && p_miss < 1.0)) throw ValidationError("p_miss", "must be in (0, 1)");
}

double fuse_occupancy(double p_prev, double p_meas, double prior, double p_min, double p_max) {
  const double odds = ((1.0 - p_meas) / p_meas) * ((1.0 - p_prev) / p_prev) *
                      (prior / (1.0 - prior));
  return std::clamp(1.0 / (1.0 + odds), p_min, p_max);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double inverse_logit(double l) { return 1.0 / (1.0 + std::exp(-l)); }

OccupancyOctree::OccupancyOctree(OccupancyParams params) : params_(params) {
  params_.validate();
  l_min_ = logit(params_.p_min);
  l_max_ = logit(params_.p_max);
  l_prior_ = logit(params_.prior);
  l_hit_ = logit(params_.p_hit) - l_prior_;
  l_miss_ = logit(params_.p_miss) - l_prior_;
  Node root;
  root.children.fill(-1);
  root.log_odds = l_prior_;
  nodes_.push_back(root);
}

bool OccupancyOctree::key_of(const Point3& p, LeafKey& key) const {
  for (int a = 0; a < 3; ++a) {
    const double scaled = std::floor(p[a] / params_.resolution);
    if (!std::isfinite(scaled)) return false;
    const auto k = static_cast<std::int64_t>(scaled) + kKeyOffset;
    if (k < 0 || k >= kKeyLimit) return false;
    key.k[a] = static_cast<std::uint16_t>(k);
  }
  return true;
}

Point3 OccupancyOctree::center_of(const LeafKey& key) const {
  Point3 c;
  for (int a = 0; a < 3; ++a) {
    c[a] = (static_cast<double>(static_cast<std::int64_t>(key.k[a]) - kKeyOffset) + 0.5) *
           params_.resolution;
  }
  return c;
}

std::vector<LeafKey> OccupancyOctree::ray_keys(const Point3& origin, const Point3& end) const {
  std::vector<LeafKey> out;
  LeafKey current;
  LeafKey last;
  if (!key_of(origin, current) || !key_of(end, last) || current == last) return out;

  const Eigen::Vector3d dir = end - origin;
  const double res = params_.resolution;
  std::array<int, 3> step{};
  Eigen::Vector3d t_max;
  Eigen::Vector3d t_delta;
  std::size_t budget = 0;
  for (int a = 0; a < 3; ++a) {
    budget += static_cast<std::size_t>(std::abs(int{last.k[a]} - int{current.k[a]}));
    if (dir[a] > 0.0) {
      step[a] = 1;
    } else if (dir[a] < 0.0) {
      step[a] = -1;
    }
    if (step[a] == 0) {
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double cell = std::floor(origin[a] / res);
    const double boundary = (cell + (step[a] > 0 ? 1.0 : 0.0)) * res;
    t_max[a] = (boundary - origin[a]) / dir[a];
    t_delta[a] = res / std::abs(dir[a]);
  }

  out.reserve(budget + 1);
  for (std::size_t i = 0; i <= budget && !(current == last); ++i) {
    out.push_back(current);
    int axis = 0;
    t_max.minCoeff(&axis);
    if (t_max[axis] > 1.0) break;
    const int next = int{current.k[axis]} + step[axis];
    if (next < 0 || next >= kKeyLimit) break;
    current.k[axis] = static_cast<std::uint16_t>(next);
    t_max[axis] += t_delta[axis];
  }
  return out;
}

std::int32_t OccupancyOctree::find(const LeafKey& key) const {
  std::int32_t node = 0;
  for (int level = 0; level < kDepth && node >= 0; ++level) {
    node = nodes_[node].children[child_slot(key, level)];
  }
  return node;
}

void OccupancyOctree::update_key(const LeafKey& key, double delta) {
  std::int32_t node = 0;
  for (int level = 0; level < kDepth; ++level) {
    const int slot = child_slot(key, level);
    std::int32_t child = nodes_[node].children[slot];
    if (child < 0) {
      child = static_cast<std::int32_t>(nodes_.size());
      Node fresh;
      fresh.children.fill(-1);
      fresh.log_odds = l_prior_;
      nodes_.push_back(fresh);
      nodes_[node].children[slot] = child;
      if (level == kDepth - 1) ++leaves_;
    }
    node = child;
  }
  double& l = nodes_[node].log_odds;
  l = std::clamp(l + delta, l_min_, l_max_);
}

void OccupancyOctree::update(const Point3& p, double p_meas) {
  LeafKey key;
  if (key_of(p, key)) update_key(key, logit(p_meas) - l_prior_);
}

std::size_t OccupancyOctree::integrate_scan(const PointCloud& cloud, const Pose& pose) {
  if (cloud.empty()) return 0;

  const Point3 origin = pose.translation();
  std::vector<std::uint64_t> hits;
  std::unordered_set<std::uint64_t> misses;
  hits.reserve(cloud.size());
  for (const auto& p : cloud) {
    const Point3 end = pose * p;
    LeafKey key;
    if (!key_of(end, key)) continue;
    hits.push_back(key.packed());
    for (const auto& k : ray_keys(origin, end)) misses.insert(k.packed());
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());

  std::vector<std::uint64_t> free_only;
  free_only.reserve(misses.size());
  for (const auto m : misses) {
    if (!std::binary_search(hits.begin(), hits.end(), m)) free_only.push_back(m);
  }
  std::sort(free_only.begin(), free_only.end());

  const auto unpack = [](std::uint64_t v) {
    LeafKey k;
    k.k = {static_cast<std::uint16_t>(v >> 32), static_cast<std::uint16_t>(v >> 16),
           static_cast<std::uint16_t>(v)};
    return k;
  };
  for (const auto m : free_only) update_key(unpack(m), l_miss_);
  for (const auto h : hits) update_key(unpack(h), l_hit_);
  return free_only.size() + hits.size();
}

double OccupancyOctree::query(const Point3& p) const {
  LeafKey key;
  if (!key_of(p, key)) return params_.prior;
  const std::int32_t node = find(key);
  return node < 0 ? params_.prior : inverse_logit(nodes_[node].log_odds);
}

void OccupancyOctree::collect(std::int32_t node, int level, std::array<std::uint32_t, 3> base,
                              double threshold, PointCloud& out) const {
  if (level == kDepth) {
    if (inverse_logit(nodes_[node].log_odds) >= threshold) {
      LeafKey key;
      key.k = {static_cast<std::uint16_t>(base[0]), static_cast<std::uint16_t>(base[1]),
               static_cast<std::uint16_t>(base[2])};
      out.push_back(center_of(key));
    }
    return;
  }
  const int bit = kDepth - 1 - level;
  for (int slot = 0; slot < 8; ++slot) {
    const std::int32_t child = nodes_[node].children[slot];
    if (child < 0) continue;
    std::array<std::uint32_t, 3> next = base;
    for (int a = 0; a < 3; ++a) next[a] |= static_cast<std::uint32_t>((slot >> a) & 1) << bit;
    collect(child, level + 1, next, threshold, out);
  }
}

PointCloud OccupancyOctree::export_occupied(double threshold) const {
  PointCloud out;
  collect(0, 0, {0, 0, 0}, threshold, out);
  return out;
}

}  // namespace solidslam
