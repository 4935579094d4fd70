#pragma once

#include <Eigen/Core>

#include "demosuff/pose.hpp"

namespace demosuff {

// Parameters of the one-parameter subgroup through a rigid motion (Chasles).
//
// For a proper screw the motion is a rotation by `angle` about the line through
// `axis_point` with direction `axis_direction`, followed by a translation of
// `translation_along_axis` along that line. A pure translation is stored with the
// unit translation direction in `axis_direction`, zero angle and the displacement
// in `translation_along_axis`. The identity motion returns angle 0, displacement 0,
// axis (0,0,1) and `is_identity` set; callers must not read the axis in that case.
struct ScrewParameters {
  Eigen::Vector3d axis_direction{0.0, 0.0, 1.0};
  Eigen::Vector3d axis_point{Eigen::Vector3d::Zero()};
  double angle = 0.0;
  double translation_along_axis = 0.0;
  bool is_pure_translation = false;
  bool is_identity = false;

  double pitch() const { return angle > 0.0 ? translation_along_axis / angle : 0.0; }
  /// Moment of the axis line, axis_point x axis_direction.
  Eigen::Vector3d moment() const { return axis_point.cross(axis_direction); }
};

ScrewParameters screw_log(const Pose& g);

/// Motion obtained by traversing `scale` of the screw (scale = 1 reproduces the motion).
Pose screw_exp(const ScrewParameters& s, double scale = 1.0);

/// Constant-screw interpolation g1 · exp(tau · log(g1⁻¹ g2)), tau in [0, 1].
Pose sclerp(const Pose& g1, const Pose& g2, double tau);

// The constant-screw path from `a` to `b`, with the screw decomposed once.
class ScrewPath {
 public:
  ScrewPath(const Pose& a, const Pose& b) : start_(a), screw_(screw_log(a.inverse() * b)) {}

  Pose at(double tau) const { return start_ * screw_exp(screw_, tau); }
  const ScrewParameters& screw() const { return screw_; }
  /// Distance from `p` to the path, minimised over tau in [0, 1].
  double distance_to(const Pose& p) const;

 private:
  Pose start_;
  ScrewParameters screw_;
};

inline double distance_to_screw_path(const Pose& a, const Pose& b, const Pose& p) {
  return ScrewPath(a, b).distance_to(p);
}

}  // namespace demosuff
