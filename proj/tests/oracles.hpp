#pragma once

// Reference computations written independently of the library code they
// check: closed forms, brute force and numerical differentiation.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "solidslam/se3.hpp"

namespace oracle {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector3d;

inline Matrix3d cross_matrix(const Vector3d& v) {
  Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// 4x4 twist matrix with the rotation part in the skew block.
inline Matrix4d twist_matrix(const Vector3d& rot, const Vector3d& trans) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = cross_matrix(rot);
  m.topRightCorner<3, 1>() = trans;
  return m;
}

/// Group exponential by Eigen's generic matrix exponential.
inline Matrix4d expm(const Vector3d& rot, const Vector3d& trans) {
  return twist_matrix(rot, trans).exp();
}

inline Vector3d apply(const Matrix4d& T, const Vector3d& p) {
  return T.topLeftCorner<3, 3>() * p + T.topRightCorner<3, 1>();
}

inline Matrix4d to_matrix(const solidslam::Pose& T) { return T.matrix(); }

/// Distance from p to the infinite line through a and b by orthogonal projection.
inline double point_line_distance(const Vector3d& p, const Vector3d& a, const Vector3d& b) {
  const Vector3d u = (b - a).normalized();
  const Vector3d d = p - a;
  return (d - d.dot(u) * u).norm();
}

/// Distance from p to the plane through a, b, c: residual of the least-squares
/// projection of (p - a) onto span(b - a, c - a).
inline double point_plane_distance(const Vector3d& p, const Vector3d& a, const Vector3d& b,
                                   const Vector3d& c) {
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = b - a;
  A.col(1) = c - a;
  const Vector3d d = p - a;
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(d);
  return (d - A * coef).norm();
}

/// Bayes update in odds form, then clamped.
inline double bayes_odds(double p_prev, double p_meas, double prior, double lo, double hi) {
  const auto odds = [](double p) { return p / (1.0 - p); };
  const double o = odds(p_meas) * odds(p_prev) / odds(prior);
  return std::clamp(o / (1.0 + o), lo, hi);
}

/// Indices of the k nearest points by linear scan, ties by index.
inline std::vector<std::size_t> brute_knn(const std::vector<Vector3d>& pts, const Vector3d& q,
                                          std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < pts.size(); ++i) d.emplace_back((pts[i] - q).squaredNorm(), i);
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(d[i].second);
  return out;
}

/// Central difference of f(exp(delta) * T) along each twist coordinate, with
/// delta ordered [translation | rotation] to match the point Jacobian layout.
template <typename F>
Eigen::Matrix<double, Eigen::Dynamic, 6> left_fd(F f, const Matrix4d& T, double h = 1e-6) {
  const auto y0 = f(T);
  Eigen::Matrix<double, Eigen::Dynamic, 6> J(y0.size(), 6);
  for (int i = 0; i < 6; ++i) {
    Vector3d trans = Vector3d::Zero();
    Vector3d rot = Vector3d::Zero();
    if (i < 3) {
      trans[i] = h;
    } else {
      rot[i - 3] = h;
    }
    const auto plus = f(expm(rot, trans) * T);
    const auto minus = f(expm(-rot, -trans) * T);
    J.col(i) = (plus - minus) / (2.0 * h);
  }
  return J;
}

inline Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Vector3d(g(rng), g(rng), g(rng)).normalized();
}

inline solidslam::Pose random_pose(std::mt19937_64& rng, double max_angle = 3.0,
                                   double max_trans = 5.0) {
  std::uniform_real_distribution<double> a(0.0, max_angle);
  std::uniform_real_distribution<double> t(-max_trans, max_trans);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(a(rng), random_unit(rng)).toRotationMatrix();
  return solidslam::Pose(R, Vector3d(t(rng), t(rng), t(rng)));
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace oracle
