#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "solidslam/types.hpp"

namespace solidslam {

// -----------------------------------------------------------------------------
// Twist ordering
//
// A Twist carries `rho` in the ROTATION block of the hat matrix and `phi` in
// the TRANSLATION column:
//
//           [ [rho]x  phi ]
//   xi^  =  [ 0 0 0    0  ]
//
// This is the reverse of the common (rho = translation) naming. The 6-vector
// form returned by Twist::vector() is [rho; phi].
//
// The point Jacobian and every residual Jacobian built on it are laid out as
// [d/d(translation) | d/d(rotation)], i.e. [phi | rho]. Solver increments in
// that layout must go through Twist::from_increment().
// -----------------------------------------------------------------------------

struct Twist {
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();  ///< rotation part, radians
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();  ///< translation part, meters

  /// [rho; phi]
  [[nodiscard]] Vector6 vector() const;
  [[nodiscard]] static Twist from_vector(const Vector6& rho_phi);

  /// Builds a twist from a Jacobian-layout increment [translation; rotation].
  [[nodiscard]] static Twist from_increment(const Vector6& translation_rotation);

  [[nodiscard]] double norm() const { return vector().norm(); }
};

/// Rigid transform in SE(3) stored as rotation matrix + translation.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  [[nodiscard]] static Pose identity() { return {}; }
  [[nodiscard]] static Pose from_translation(const Eigen::Vector3d& t);
  [[nodiscard]] static Pose from_rotation(const Eigen::Matrix3d& r);
  [[nodiscard]] static Pose from_quaternion(const Eigen::Quaterniond& q,
                                            const Eigen::Vector3d& t);
  /// Rotation by `angle` radians about `axis` (normalized internally).
  [[nodiscard]] static Pose from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                            const Eigen::Vector3d& t = Eigen::Vector3d::Zero());

  [[nodiscard]] const Eigen::Matrix3d& rotation() const { return rotation_; }
  [[nodiscard]] const Eigen::Vector3d& translation() const { return translation_; }

  /// Unit quaternion with w >= 0.
  [[nodiscard]] Eigen::Quaterniond quaternion() const;
  [[nodiscard]] Eigen::Matrix4d matrix() const;

  /// Rotation angle in [0, pi].
  [[nodiscard]] double angle() const;

  [[nodiscard]] Pose inverse() const;
  [[nodiscard]] Pose operator*(const Pose& other) const;
  [[nodiscard]] Point3 operator*(const Point3& p) const { return rotation_ * p + translation_; }

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

/// Tolerance on max|R^T R - I| beyond which compositions re-orthonormalize.
inline constexpr double kOrthonormalTolerance = 1e-12;

/// Below this rotation angle exp/log switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;

[[nodiscard]] Eigen::Matrix3d skew(const Eigen::Vector3d& v);
[[nodiscard]] Eigen::Matrix4d hat(const Twist& xi);

[[nodiscard]] Pose exp(const Twist& xi);

/// Principal-branch logarithm. Throws AngleNearPi when the rotation angle is
/// within 1e-6 of pi.
[[nodiscard]] Twist log(const Pose& T);

[[nodiscard]] inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
[[nodiscard]] inline Pose inverse(const Pose& t) { return t.inverse(); }
[[nodiscard]] inline Point3 transform_point(const Pose& t, const Point3& p) { return t * p; }

/// d(exp(dxi) * T * p) / d(dxi) at dxi = 0, columns [translation | rotation]:
/// [ I3 | -[T p]x ].
[[nodiscard]] Matrix36 point_jacobian(const Pose& T, const Point3& p);

/// Nearest rotation matrix in the Frobenius sense.
[[nodiscard]] Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

/// max|R^T R - I|
[[nodiscard]] double orthonormality_error(const Eigen::Matrix3d& r);

}  // namespace solidslam
