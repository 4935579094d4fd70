#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json_fwd.hpp>

namespace demosuff {

// q = real + eps * dual. Unit dual quaternions represent SE(3) with a double cover.
struct DualQuaternion {
  Eigen::Quaterniond real{1.0, 0.0, 0.0, 0.0};
  Eigen::Quaterniond dual{0.0, 0.0, 0.0, 0.0};

  DualQuaternion operator*(const DualQuaternion& rhs) const;
  DualQuaternion conjugate() const;
};

// Rigid-body configuration. Rotation is kept unit-norm and sign-canonical (w >= 0,
// or first nonzero component positive when w == 0), so two equal motions compare equal.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Eigen::Vector3d& t);
  static Pose from_axis_angle(const Eigen::Vector3d& axis, double angle,
                              const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());
  static Pose from_matrix(const Eigen::Matrix4d& m);
  static Pose from_dual_quaternion(const DualQuaternion& dq);

  const Eigen::Quaterniond& rotation() const { return q_; }
  const Eigen::Vector3d& translation() const { return t_; }
  Eigen::Matrix3d rotation_matrix() const { return q_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;
  DualQuaternion dual_quaternion() const;

  Pose inverse() const;
  Eigen::Vector3d transform_point(const Eigen::Vector3d& p) const { return q_ * p + t_; }

 private:
  Eigen::Quaterniond q_{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d t_{Eigen::Vector3d::Zero()};
};

/// Group product: the frame `b` expressed relative to `a` (a·b).
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }
inline Pose inverse(const Pose& g) { return g.inverse(); }

Eigen::Quaterniond canonical_quaternion(Eigen::Quaterniond q);

/// Geodesic angle between two rotations, in [0, pi].
double rotation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// max(geodesic rotation angle, Euclidean translation distance). Every pose
/// tolerance in the library is expressed in this metric.
double pose_distance(const Pose& a, const Pose& b);

void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);

}  // namespace demosuff
