#include "solidslam/odometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace solidslam {

void OdometryParams::validate() const {
  if (window_size < 1) throw ValidationError("window_size", "must be >= 1");
  if (!(edge_max_dist > 0.0)) throw ValidationError("edge_max_dist", "must be > 0");
  if (!(plane_max_dist > 0.0)) throw ValidationError("plane_max_dist", "must be > 0");
  if (!(convergence_eps > 0.0)) throw ValidationError("convergence_eps", "must be > 0");
  if (max_iterations < 1) throw ValidationError("max_iterations", "must be >= 1");
  if (max_step_halvings < 0) throw ValidationError("max_step_halvings", "must be >= 0");
  if (!(edge_voxel >= 0.0)) throw ValidationError("edge_voxel", "must be >= 0");
  if (!(plane_voxel >= 0.0)) throw ValidationError("plane_voxel", "must be >= 0");
  if (min_correspondences < 1) throw ValidationError("min_correspondences", "must be >= 1");
  if (!(max_condition > 1.0)) throw ValidationError("max_condition", "must be > 1");
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (leaf <= 0.0 || cloud.empty()) return cloud;

  struct Entry {
    std::int64_t x, y, z;
    std::size_t index;
  };
  std::vector<Entry> entries;
  entries.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud[i];
    entries.push_back({static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                       static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                       static_cast<std::int64_t>(std::floor(p.z() / leaf)), i});
  }
  const auto key_less = [](const Entry& a, const Entry& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    if (a.z != b.z) return a.z < b.z;
    return a.index < b.index;
  };
  std::sort(entries.begin(), entries.end(), key_less);

  PointCloud out;
  for (std::size_t i = 0; i < entries.size();) {
    Point3 sum = Point3::Zero();
    std::size_t j = i;
    for (; j < entries.size() && entries[j].x == entries[i].x && entries[j].y == entries[i].y &&
           entries[j].z == entries[i].z;
         ++j) {
      sum += cloud[entries[j].index];
    }
    out.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

LocalMap update_local_map(LocalMap map, const FeatureSet& features, const Pose& pose,
                          const OdometryParams& params) {
  map.window_.push_back({features, pose});
  while (map.window_.size() > static_cast<std::size_t>(params.window_size)) {
    map.window_.pop_front();
  }

  PointCloud edges;
  PointCloud planars;
  for (const auto& frame : map.window_) {
    for (const auto& p : frame.features.edges) edges.push_back(frame.pose * p);
    for (const auto& p : frame.features.planars) planars.push_back(frame.pose * p);
  }
  map.edge_index_ = KdTree(voxel_downsample(edges, params.edge_voxel));
  map.plane_index_ = KdTree(voxel_downsample(planars, params.plane_voxel));
  return map;
}

Pose predict_initial_pose(const Pose& prev, const Pose& prev2) {
  return prev * prev2.inverse() * prev;
}

Pose predict_initial_pose(std::span<const Pose> history) {
  if (history.empty()) return Pose::identity();
  if (history.size() == 1) return history.back();
  return predict_initial_pose(history[history.size() - 1], history[history.size() - 2]);
}

std::optional<Correspondence> find_edge_correspondence(const Point3& p_hat, const LocalMap& map,
                                                       double max_dist) {
  const auto nn = map.edge_index().nearest(p_hat, 2);
  if (nn.size() < 2 || nn[1].squared_distance > max_dist * max_dist) return std::nullopt;

  Correspondence c;
  c.kind = Correspondence::Kind::Edge;
  c.targets[0] = map.edge_index().points()[nn[0].index];
  c.targets[1] = map.edge_index().points()[nn[1].index];
  if ((c.targets[0] - c.targets[1]).norm() < kDegenerateLength) return std::nullopt;
  return c;
}

std::optional<Correspondence> find_plane_correspondence(const Point3& p_hat, const LocalMap& map,
                                                        double max_dist) {
  const auto nn = map.plane_index().nearest(p_hat, 3);
  if (nn.size() < 3 || nn[2].squared_distance > max_dist * max_dist) return std::nullopt;

  Correspondence c;
  c.kind = Correspondence::Kind::Plane;
  for (std::size_t i = 0; i < 3; ++i) c.targets[i] = map.plane_index().points()[nn[i].index];
  const double area =
      0.5 * (c.targets[1] - c.targets[0]).cross(c.targets[2] - c.targets[0]).norm();
  if (area <= kMinTriangleArea) return std::nullopt;
  return c;
}

double edge_residual(const Point3& p_hat, const Point3& e1, const Point3& e2) {
  const double len = (e1 - e2).norm();
  if (len < kDegenerateLength) throw DegenerateEdge("edge_residual: coincident edge points");
  return (p_hat - e2).cross(p_hat - e1).norm() / len;
}

namespace {

Eigen::Vector3d plane_normal(const Point3& s1, const Point3& s2, const Point3& s3) {
  const Eigen::Vector3d n = (s1 - s2).cross(s1 - s3);
  const double norm = n.norm();
  if (norm < kDegenerateLength) throw DegeneratePlane("plane_residual: collinear plane points");
  return n / norm;
}

}  // namespace

double plane_residual(const Point3& p_hat, const Point3& s1, const Point3& s2, const Point3& s3) {
  return std::abs((p_hat - s1).dot(plane_normal(s1, s2, s3)));
}

RowVector6 edge_jacobian(const Point3& p_hat, const Point3& e1, const Point3& e2,
                         const Matrix36& j_p) {
  const Eigen::Vector3d d = e1 - e2;
  const double len = d.norm();
  if (len < kDegenerateLength) throw DegenerateEdge("edge_jacobian: coincident edge points");
  const Eigen::Vector3d c = (p_hat - e2).cross(p_hat - e1);
  const double c_norm = c.norm();
  if (c_norm / len < 1e-12) return RowVector6::Zero();
  const Eigen::Vector3d n = c / c_norm;
  return n.transpose() * skew(d / len) * j_p;
}

RowVector6 plane_jacobian(const Point3& p_hat, const Point3& s1, const Point3& s2,
                          const Point3& s3, const Matrix36& j_p) {
  const Eigen::Vector3d n = plane_normal(s1, s2, s3);
  const double sign = (p_hat - s1).dot(n) < 0.0 ? -1.0 : 1.0;
  return sign * n.transpose() * j_p;
}

namespace {

double residual_of(const Correspondence& c, const Point3& p_hat) {
  if (c.kind == Correspondence::Kind::Edge) {
    return edge_residual(p_hat, c.targets[0], c.targets[1]);
  }
  return plane_residual(p_hat, c.targets[0], c.targets[1], c.targets[2]);
}

double cost_at(const std::vector<Correspondence>& corr, const Pose& T) {
  double cost = 0.0;
  for (const auto& c : corr) {
    const double r = residual_of(c, T * c.source);
    cost += r * r;
  }
  return cost;
}

std::vector<Correspondence> associate(const PointCloud& edges, const PointCloud& planars,
                                      const LocalMap& map, const Pose& T,
                                      const OdometryParams& params, std::size_t& edge_count) {
  std::vector<Correspondence> out;
  out.reserve(edges.size() + planars.size());
  for (const auto& p : edges) {
    if (auto c = find_edge_correspondence(T * p, map, params.edge_max_dist)) {
      c->source = p;
      out.push_back(*c);
    }
  }
  edge_count = out.size();
  for (const auto& p : planars) {
    if (auto c = find_plane_correspondence(T * p, map, params.plane_max_dist)) {
      c->source = p;
      out.push_back(*c);
    }
  }
  return out;
}

}  // namespace

PoseEstimate estimate_pose(const FeatureSet& features, const LocalMap& map, const Pose& initial,
                           const OdometryParams& params) {
  PoseEstimate est;
  est.pose = initial;
  if (map.empty()) {
    est.degenerate = true;
    return est;
  }

  const PointCloud edges = voxel_downsample(features.edges, params.edge_voxel);
  const PointCloud planars = voxel_downsample(features.planars, params.plane_voxel);

  const auto fail = [&]() {
    est.pose = initial;
    est.degenerate = true;
    est.converged = false;
    return est;
  };

  Pose T = initial;
  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    est.iterations = iter;
    std::size_t edge_count = 0;
    const auto corr = associate(edges, planars, map, T, params, edge_count);
    est.edge_inliers = edge_count;
    est.plane_inliers = corr.size() - edge_count;
    if (corr.size() < static_cast<std::size_t>(params.min_correspondences)) return fail();

    Matrix6 H = Matrix6::Zero();
    Vector6 g = Vector6::Zero();
    double cost = 0.0;
    for (const auto& c : corr) {
      const Point3 p_hat = T * c.source;
      const Matrix36 j_p = point_jacobian(T, c.source);
      double r;
      RowVector6 J;
      if (c.kind == Correspondence::Kind::Edge) {
        r = edge_residual(p_hat, c.targets[0], c.targets[1]);
        J = edge_jacobian(p_hat, c.targets[0], c.targets[1], j_p);
      } else {
        r = plane_residual(p_hat, c.targets[0], c.targets[1], c.targets[2]);
        J = plane_jacobian(p_hat, c.targets[0], c.targets[1], c.targets[2], j_p);
      }
      H.noalias() += J.transpose() * J;
      g.noalias() += J.transpose() * r;
      cost += r * r;
    }
    if (iter == 1) est.initial_cost = cost;
    est.final_cost = cost;

    const Eigen::SelfAdjointEigenSolver<Matrix6> eig(H, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(5);
    est.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (est.condition > params.max_condition) return fail();

    const Vector6 step = -H.ldlt().solve(g);

    // Fixed-correspondence safeguard: halve the step while the cost grows.
    double scale = 1.0;
    bool accepted = false;
    Pose candidate;
    double candidate_cost = cost;
    for (int h = 0; h <= params.max_step_halvings; ++h, scale *= 0.5) {
      candidate = exp(Twist::from_increment(scale * step)) * T;
      candidate_cost = cost_at(corr, candidate);
      if (candidate_cost <= cost) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      est.converged = true;  // no descent left for this association
      break;
    }
    T = candidate;
    est.final_cost = candidate_cost;
    if ((scale * step).norm() < params.convergence_eps) {
      est.converged = true;
      break;
    }
  }

  est.pose = T;
  return est;
}

Odometry::Odometry(OdometryParams params) : params_(params) { params_.validate(); }

PoseEstimate Odometry::process(const FeatureSet& features) {
  PoseEstimate est;
  if (frames_ == 0) {
    est.pose = Pose::identity();
    est.converged = true;
  } else {
    const Pose init = frames_ == 1 ? last_[1] : predict_initial_pose(last_[1], last_[0]);
    est = estimate_pose(features, map_, init, params_);
  }
  last_[0] = last_[1];
  last_[1] = est.pose;
  ++frames_;
  map_ = update_local_map(std::move(map_), features, est.pose, params_);
  return est;
}

}  // namespace solidslam
