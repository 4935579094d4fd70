#include "demosuff/screw.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace demosuff {

namespace {

constexpr double kIdentityTranslation = 1e-14;
constexpr double kPureTranslationAngle = 1e-10;
constexpr double kAntipodeScalar = 1e-6;

// Axis of a rotation close to pi from the symmetric part of R:
// (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) l l^T.
Eigen::Vector3d axis_near_antipode(const Eigen::Quaterniond& q, double angle) {
  const Eigen::Matrix3d r = q.toRotationMatrix();
  const double c = std::cos(angle);
  const Eigen::Matrix3d llt = (0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity()) / (1.0 - c);
  Eigen::Index k = 0;
  llt.diagonal().maxCoeff(&k);
  Eigen::Vector3d l = llt.col(k).normalized();
  if (l.dot(q.vec()) < 0.0) l = -l;
  return l;
}

}  // namespace

ScrewParameters screw_log(const Pose& g) {
  const DualQuaternion dq = g.dual_quaternion();
  const Eigen::Quaterniond& r = dq.real;
  const Eigen::Quaterniond& d = dq.dual;
  const double sin_half = r.vec().norm();
  const double angle = 2.0 * std::atan2(sin_half, r.w());

  ScrewParameters s;
  if (angle < kPureTranslationAngle) {
    const Eigen::Vector3d& t = g.translation();
    const double len = t.norm();
    if (len < kIdentityTranslation) {
      s.is_identity = true;
      return s;
    }
    s.is_pure_translation = true;
    s.axis_direction = t / len;
    s.translation_along_axis = len;
    return s;
  }

  const Eigen::Vector3d l = std::abs(r.w()) < kAntipodeScalar ? axis_near_antipode(r, angle) : Eigen::Vector3d(r.vec() / sin_half);
  const double cos_half = r.w();
  const double along = -2.0 * d.w() / sin_half;
  const Eigen::Vector3d m = (d.vec() - 0.5 * along * cos_half * l) / sin_half;

  s.axis_direction = l;
  s.axis_point = l.cross(m);
  s.angle = angle;
  s.translation_along_axis = along;
  return s;
}

Pose screw_exp(const ScrewParameters& s, double scale) {
  if (s.is_identity) return Pose::identity();
  if (s.is_pure_translation) return Pose::from_translation(s.axis_direction * (s.translation_along_axis * scale));

  const double half = 0.5 * s.angle * scale;
  const double along = s.translation_along_axis * scale;
  const double sh = std::sin(half);
  const double ch = std::cos(half);
  const Eigen::Vector3d& l = s.axis_direction;
  const Eigen::Vector3d m = s.moment();

  DualQuaternion dq;
  dq.real = Eigen::Quaterniond(ch, sh * l.x(), sh * l.y(), sh * l.z());
  const Eigen::Vector3d dv = sh * m + 0.5 * along * ch * l;
  dq.dual = Eigen::Quaterniond(-0.5 * along * sh, dv.x(), dv.y(), dv.z());
  return Pose::from_dual_quaternion(dq);
}

Pose sclerp(const Pose& g1, const Pose& g2, double tau) {
  if (tau == 0.0) return g1;
  if (tau == 1.0) return g2;
  return g1 * screw_exp(screw_log(g1.inverse() * g2), tau);
}

double ScrewPath::distance_to(const Pose& p) const {
  auto at = [&](double tau) { return pose_distance(p, this->at(tau)); };

  constexpr int kCoarse = 32;
  std::array<double, kCoarse + 1> coarse{};
  for (int i = 0; i <= kCoarse; ++i) coarse[i] = at(static_cast<double>(i) / kCoarse);
  const auto best = static_cast<int>(std::min_element(coarse.begin(), coarse.end()) - coarse.begin());

  // Golden-section refinement around the coarse minimum.
  double lo = std::max(0, best - 1) / static_cast<double>(kCoarse);
  double hi = std::min(kCoarse, best + 1) / static_cast<double>(kCoarse);
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = at(x1);
  double f2 = at(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = at(x2);
    }
  }
  return std::min({coarse[best], f1, f2});
}

}  // namespace demosuff
