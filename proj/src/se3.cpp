#include "solidslam/se3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace solidslam {

namespace {

Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
  return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

// Coefficients of V = I + b K + c K^2 where K = [rho]x / theta^0 (unnormalized).
// The series branches avoid cancellation in (1 - cos) and (theta - sin).
struct VCoefficients {
  double b;
  double c;
};

VCoefficients v_coefficients(double theta) {
  const double t2 = theta * theta;
  if (theta < 1e-4) {
    return {0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0};
  }
  const double half_sin = std::sin(0.5 * theta);
  return {2.0 * half_sin * half_sin / t2, (theta - std::sin(theta)) / (t2 * theta)};
}

}  // namespace

Vector6 Twist::vector() const {
  Vector6 v;
  v << rho, phi;
  return v;
}

Twist Twist::from_vector(const Vector6& rho_phi) {
  return {rho_phi.head<3>(), rho_phi.tail<3>()};
}

Twist Twist::from_increment(const Vector6& translation_rotation) {
  return {translation_rotation.tail<3>(), translation_rotation.head<3>()};
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (orthonormality_error(rotation_) > kOrthonormalTolerance) {
    rotation_ = orthonormalize(rotation_);
  }
}

Pose Pose::from_translation(const Eigen::Vector3d& t) {
  return {Eigen::Matrix3d::Identity(), t};
}

Pose Pose::from_rotation(const Eigen::Matrix3d& r) { return {r, Eigen::Vector3d::Zero()}; }

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Pose Pose::from_axis_angle(const Eigen::Vector3d& axis, double angle, const Eigen::Vector3d& t) {
  return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), t};
}

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double Pose::angle() const {
  const double s = 0.5 * vee(rotation_).norm();
  const double c = 0.5 * (rotation_.trace() - 1.0);
  return std::atan2(s, c);
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

Pose Pose::operator*(const Pose& other) const {
  return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Eigen::Matrix4d hat(const Twist& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.rho);
  m.topRightCorner<3, 1>() = xi.phi;
  return m;
}

Pose exp(const Twist& xi) {
  const double theta = xi.rho.norm();
  const Eigen::Matrix3d k = skew(xi.rho);
  const Eigen::Matrix3d k2 = k * k;
  const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();

  Eigen::Matrix3d r;
  if (theta < kSmallAngle) {
    r = eye + k + 0.5 * k2;
  } else {
    const double half_sin = std::sin(0.5 * theta);
    r = eye + (std::sin(theta) / theta) * k + (2.0 * half_sin * half_sin / (theta * theta)) * k2;
  }
  const auto [b, c] = v_coefficients(theta);
  const Eigen::Matrix3d v = eye + b * k + c * k2;
  return {r, v * xi.phi};
}

Twist log(const Pose& T) {
  const Eigen::Matrix3d& r = T.rotation();
  const Eigen::Vector3d w = vee(r);
  const double theta = std::atan2(0.5 * w.norm(), 0.5 * (r.trace() - 1.0));
  if (theta > std::numbers::pi - 1e-6) {
    throw AngleNearPi("log: rotation angle " + std::to_string(theta) + " is too close to pi");
  }

  double scale;
  if (theta < kSmallAngle) {
    scale = 0.5 * (1.0 + theta * theta / 6.0);
  } else {
    scale = theta / (2.0 * std::sin(theta));
  }
  Twist xi;
  xi.rho = scale * w;

  const Eigen::Matrix3d k = skew(xi.rho);
  double c;
  if (theta < 1e-4) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Eigen::Matrix3d v_inv = Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
  xi.phi = v_inv * T.translation();
  return xi;
}

Matrix36 point_jacobian(const Pose& T, const Point3& p) {
  Matrix36 j;
  j.leftCols<3>().setIdentity();
  j.rightCols<3>() = -skew(T * p);
  return j;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

double orthonormality_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace solidslam
