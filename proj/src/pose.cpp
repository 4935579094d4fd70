#include "demosuff/pose.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace demosuff {

namespace {

Eigen::Quaterniond qmul(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) { return a * b; }

Eigen::Quaterniond qadd(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  return {a.w() + b.w(), a.x() + b.x(), a.y() + b.y(), a.z() + b.z()};
}

}  // namespace

DualQuaternion DualQuaternion::operator*(const DualQuaternion& rhs) const {
  return {qmul(real, rhs.real), qadd(qmul(real, rhs.dual), qmul(dual, rhs.real))};
}

DualQuaternion DualQuaternion::conjugate() const { return {real.conjugate(), dual.conjugate()}; }

Eigen::Quaterniond canonical_quaternion(Eigen::Quaterniond q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("rotation quaternion has zero or non-finite norm");
  // Unit to rounding: left bit-exact.
  if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) q.coeffs() /= n;
  bool flip = false;
  if (q.w() < 0.0) {
    flip = true;
  } else if (q.w() == 0.0) {
    for (double c : {q.x(), q.y(), q.z()}) {
      if (c != 0.0) {
        flip = c < 0.0;
        break;
      }
    }
  }
  if (flip) q.coeffs() = -q.coeffs();
  return q;
}

Pose::Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
    : q_(canonical_quaternion(rotation)), t_(translation) {
  if (!t_.allFinite()) throw std::invalid_argument("translation is not finite");
}

Pose Pose::from_translation(const Eigen::Vector3d& t) { return {Eigen::Quaterniond::Identity(), t}; }

Pose Pose::from_axis_angle(const Eigen::Vector3d& axis, double angle, const Eigen::Vector3d& translation) {
  return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())), translation};
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return {Eigen::Quaterniond(Eigen::Matrix3d(m.topLeftCorner<3, 3>())), m.topRightCorner<3, 1>()};
}

Pose Pose::from_dual_quaternion(const DualQuaternion& dq) {
  const double n = dq.real.norm();
  Eigen::Quaterniond r = dq.real;
  Eigen::Quaterniond d = dq.dual;
  r.coeffs() /= n;
  d.coeffs() /= n;
  const Eigen::Quaterniond t = d * r.conjugate();
  return {r, 2.0 * t.vec()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = t_;
  return m;
}

DualQuaternion Pose::dual_quaternion() const {
  const Eigen::Quaterniond t(0.0, 0.5 * t_.x(), 0.5 * t_.y(), 0.5 * t_.z());
  return {q_, t * q_};
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond qi = q_.conjugate();
  return {qi, -(qi * t_)};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

double rotation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond rel = a.conjugate() * b;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double pose_distance(const Pose& a, const Pose& b) {
  return std::max(rotation_distance(a.rotation(), b.rotation()), (a.translation() - b.translation()).norm());
}

void to_json(nlohmann::json& j, const Pose& p) {
  const auto& q = p.rotation();
  const auto& t = p.translation();
  j = nlohmann::json{{"q", {q.w(), q.x(), q.y(), q.z()}}, {"t", {t.x(), t.y(), t.z()}}};
}

void from_json(const nlohmann::json& j, Pose& p) {
  const auto q = j.at("q").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  if (q.size() != 4 || t.size() != 3) throw std::invalid_argument("pose JSON needs q[4] and t[3]");
  p = Pose(Eigen::Quaterniond(q[0], q[1], q[2], q[3]), Eigen::Vector3d(t[0], t[1], t[2]));
}

}  // namespace demosuff
