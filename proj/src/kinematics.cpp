#include "demosuff/kinematics.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

namespace demosuff {

namespace {

struct Frame {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

Frame to_frame(const Pose& g) { return {g.rotation_matrix(), g.translation()}; }

Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& a, double angle) {
  const double s = std::sin(angle);
  const double c = std::cos(angle);
  Eigen::Matrix3d k;
  k << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return Eigen::Matrix3d::Identity() + s * k + (1.0 - c) * (k * k);
}

// One pass down the chain; fills the Jacobian when requested.
Frame chain(const ManipulatorModel& m, const JointConfig& q, Jacobian* jac) {
  if (q.size() != m.dof()) throw DimensionMismatch("joint vector length does not match the model");
  const auto& joints = m.joints();
  Frame f = to_frame(m.base());
  const int n = m.dof();
  Eigen::Vector3d zs[kMaxJoints];
  Eigen::Vector3d ps[kMaxJoints];
  for (int i = 0; i < n; ++i) {
    const Joint& jt = joints[i];
    const Eigen::Matrix3d ro = jt.origin.rotation_matrix();
    f.p += f.r * jt.origin.translation();
    f.r = f.r * ro;
    zs[i] = f.r * jt.axis;
    ps[i] = f.p;
    if (jt.kind == JointKind::revolute) {
      f.r = f.r * axis_rotation(jt.axis, q[i]);
    } else {
      f.p += zs[i] * q[i];
    }
  }
  f.p += f.r * m.tool().translation();
  f.r = f.r * m.tool().rotation_matrix();
  if (jac != nullptr) {
    jac->resize(6, n);
    for (int i = 0; i < n; ++i) {
      if (joints[i].kind == JointKind::revolute) {
        jac->col(i) << zs[i].cross(f.p - ps[i]), zs[i];
      } else {
        jac->col(i) << zs[i], Eigen::Vector3d::Zero();
      }
    }
  }
  return f;
}

// Spatial error twist (linear; angular) taking `cur` onto `target`, and its pose distance.
double frame_error(const Frame& target, const Frame& cur, Eigen::Matrix<double, 6, 1>& err) {
  err.head<3>() = target.p - cur.p;
  const Eigen::AngleAxisd aa(Eigen::Matrix3d(target.r * cur.r.transpose()));
  double angle = aa.angle();
  Eigen::Vector3d axis = aa.axis();
  if (angle > std::numbers::pi) {
    angle = 2.0 * std::numbers::pi - angle;
    axis = -axis;
  }
  err.tail<3>() = angle * axis;
  return std::max(angle, err.head<3>().norm());
}

enum class StepOutcome { reached, limit, diverged };

// Iterates DLS steps on q in place until the target is within tolerance. Limits
// apply to the converged configuration, not to the solver's inner iterates.
StepOutcome converge(const ManipulatorModel& m, JointConfig& q, const Frame& target, const IkSettings& s,
                     int* iterations) {
  const int n = m.dof();
  Jacobian jac(6, n);
  Eigen::Matrix<double, 6, 1> err;
  using Square = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxJoints, kMaxJoints>;
  const double lambda2 = s.damping * s.damping;
  for (int it = 0;; ++it) {
    const Frame cur = chain(m, q, &jac);
    if (frame_error(target, cur, err) < s.tolerance) {
      if (iterations != nullptr) *iterations = it;
      return m.within_limits(q) ? StepOutcome::reached : StepOutcome::limit;
    }
    if (it >= s.max_iterations) {
      if (iterations != nullptr) *iterations = it;
      return StepOutcome::diverged;
    }
    Square a = jac.transpose() * jac;
    a.diagonal().array() += lambda2;
    JointConfig dq = a.ldlt().solve(jac.transpose() * err);
    const double big = dq.cwiseAbs().maxCoeff();
    if (!std::isfinite(big)) return StepOutcome::diverged;
    if (big > s.max_step) dq *= s.max_step / big;
    q += dq;
  }
}

}  // namespace

ManipulatorModel::ManipulatorModel(std::string name, std::vector<Joint> joints, Pose base, Pose tool,
                                   std::optional<JointConfig> home)
    : name_(std::move(name)), joints_(std::move(joints)), base_(base), tool_(tool) {
  if (joints_.size() < 2 || joints_.size() > static_cast<std::size_t>(kMaxJoints))
    throw std::invalid_argument("manipulator needs between 2 and 12 joints");
  for (auto& j : joints_) {
    if (!(j.lo < j.hi)) throw std::invalid_argument("joint limit lo must be < hi");
    const double n = j.axis.norm();
    if (!(n > 0.0)) throw std::invalid_argument("joint axis must be nonzero");
    j.axis /= n;
  }
  if (home) {
    if (home->size() != dof()) throw DimensionMismatch("home configuration length does not match the joints");
    home_ = *home;
  } else {
    home_.resize(dof());
    for (int i = 0; i < dof(); ++i) home_[i] = std::clamp(0.0, joints_[i].lo, joints_[i].hi);
  }
  if (!within_limits(home_)) throw std::invalid_argument("home configuration violates the joint limits");
}

bool ManipulatorModel::within_limits(const JointConfig& q) const {
  for (int i = 0; i < dof(); ++i) {
    if (q[i] < joints_[i].lo || q[i] > joints_[i].hi) return false;
  }
  return true;
}

const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::success: return "success";
    case TrackStatus::joint_limit_violation: return "joint_limit_violation";
    case TrackStatus::ik_divergence: return "ik_divergence";
  }
  return "unknown";
}

Pose forward_kinematics(const ManipulatorModel& m, const JointConfig& q) {
  const Frame f = chain(m, q, nullptr);
  return {Eigen::Quaterniond(f.r), f.p};
}

Jacobian jacobian(const ManipulatorModel& m, const JointConfig& q) {
  Jacobian j;
  chain(m, q, &j);
  return j;
}

IkResult solve_ik(const ManipulatorModel& m, const JointConfig& seed, const Pose& target, const IkSettings& s) {
  if (seed.size() != m.dof()) throw DimensionMismatch("seed length does not match the model");
  IkResult r;
  r.q = seed;
  if (!m.within_limits(seed)) {
    r.status = TrackStatus::joint_limit_violation;
    return r;
  }
  switch (converge(m, r.q, to_frame(target), s, &r.iterations)) {
    case StepOutcome::reached: r.status = TrackStatus::success; break;
    case StepOutcome::limit: r.status = TrackStatus::joint_limit_violation; break;
    case StepOutcome::diverged: r.status = TrackStatus::ik_divergence; break;
  }
  return r;
}

TrackResult track_pose_path(const ManipulatorModel& m, const JointConfig& q0, std::span<const Waypoint> waypoints,
                            const IkSettings& s) {
  if (q0.size() != m.dof()) throw DimensionMismatch("start configuration length does not match the model");
  if (waypoints.empty()) throw std::invalid_argument("track_pose_path needs at least one waypoint");
  if (!m.within_limits(q0)) throw StartMismatch("start configuration violates the joint limits");
  if (pose_distance(forward_kinematics(m, q0), waypoints.front().pose) > s.tolerance)
    throw StartMismatch("start configuration does not realise the first waypoint");

  TrackResult r;
  r.joint_path.reserve(waypoints.size());
  r.joint_path.push_back(q0);
  JointConfig q = q0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const StepOutcome o = converge(m, q, to_frame(waypoints[i].pose), s, nullptr);
    if (o != StepOutcome::reached) {
      r.status = o == StepOutcome::limit ? TrackStatus::joint_limit_violation : TrackStatus::ik_divergence;
      r.failed_waypoint_index = i;
      r.failed_segment_index = waypoints[i].segment;
      return r;
    }
    r.joint_path.push_back(q);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bundled models

namespace {

Joint revolute(const Eigen::Vector3d& axis, const Eigen::Vector3d& offset, double lo, double hi) {
  return {JointKind::revolute, axis, Pose::from_translation(offset), lo, hi};
}

}  // namespace

ManipulatorModel builtin_model(const std::string& id) {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
  const double pi = std::numbers::pi;
  if (id == "planar-2r") {
    return ManipulatorModel("planar-2r",
                            {revolute(z, Eigen::Vector3d::Zero(), -pi, pi), revolute(z, {1.0, 0.0, 0.0}, -pi, pi)}, {},
                            Pose::from_translation({1.0, 0.0, 0.0}));
  }
  if (id == "planar-3r") {
    // Elbow restricted to one branch; the lopsided wrist span is what makes plans fail.
    JointConfig home(3);
    home << -0.647, 1.535, -0.888;
    return ManipulatorModel("planar-3r",
                            {revolute(z, Eigen::Vector3d::Zero(), -2.5, 2.5), revolute(z, {0.45, 0.0, 0.0}, 0.05, 2.8),
                             revolute(z, {0.35, 0.0, 0.0}, -1.9, 0.3)},
                            {}, Pose::from_translation({0.12, 0.0, 0.0}), home);
  }
  if (id == "baxter-like-7dof") {
    // Joint spans follow the published Baxter arm ranges; link geometry is a
    // simplified S0-S1-E0-E1-W0-W1-W2 chain and is not calibrated.
    JointConfig home(7);
    home << 0.0, -0.55, 0.0, 1.3, 0.0, 0.8, 0.0;
    const Pose mount = Pose::from_axis_angle(z, pi / 4.0, {0.064, 0.259, 0.129});
    return ManipulatorModel("baxter-like-7dof",
                            {revolute(z, {0.0, 0.0, 0.27}, -1.7016, 1.7016),
                             revolute(y, {0.069, 0.0, 0.0}, -2.147, 1.047),
                             revolute(x, {0.0, 0.0, 0.0}, -3.0541, 3.0541),
                             revolute(y, {0.37, 0.0, 0.0}, -0.05, 2.618),
                             revolute(x, {0.0, 0.0, 0.0}, -3.059, 3.059),
                             revolute(y, {0.37, 0.0, 0.0}, -1.5707, 2.094),
                             revolute(x, {0.0, 0.0, 0.0}, -3.059, 3.059)},
                            mount, Pose::from_translation({0.3, 0.0, 0.0}), home);
  }
  throw std::invalid_argument("unknown builtin model: " + id);
}

std::vector<std::string> builtin_model_ids() { return {"planar-2r", "planar-3r", "baxter-like-7dof"}; }

// ---------------------------------------------------------------------------
// JSON

nlohmann::json joint_config_to_json(const JointConfig& q) {
  auto a = nlohmann::json::array();
  for (int i = 0; i < q.size(); ++i) a.push_back(q[i]);
  return a;
}

JointConfig joint_config_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() > static_cast<std::size_t>(kMaxJoints)) throw DimensionMismatch("joint vector too long");
  JointConfig q(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) q[static_cast<Eigen::Index>(i)] = v[i];
  return q;
}

void to_json(nlohmann::json& j, const ManipulatorModel& m) {
  auto joints = nlohmann::json::array();
  for (const auto& jt : m.joints()) {
    joints.push_back({{"kind", jt.kind == JointKind::revolute ? "revolute" : "prismatic"},
                      {"axis", {jt.axis.x(), jt.axis.y(), jt.axis.z()}},
                      {"origin", jt.origin},
                      {"lo", jt.lo},
                      {"hi", jt.hi}});
  }
  j = nlohmann::json{{"name", m.name()},
                     {"joints", joints},
                     {"base", m.base()},
                     {"tool", m.tool()},
                     {"home", joint_config_to_json(m.home())}};
}

ManipulatorModel model_from_json(const nlohmann::json& j) {
  std::vector<Joint> joints;
  for (const auto& e : j.at("joints")) {
    Joint jt;
    const std::string kind = e.value("kind", "revolute");
    if (kind != "revolute" && kind != "prismatic") throw std::invalid_argument("joint kind must be revolute|prismatic");
    jt.kind = kind == "revolute" ? JointKind::revolute : JointKind::prismatic;
    const auto a = e.at("axis").get<std::vector<double>>();
    if (a.size() != 3) throw std::invalid_argument("joint axis needs 3 components");
    jt.axis = Eigen::Vector3d(a[0], a[1], a[2]);
    if (e.contains("origin")) jt.origin = e.at("origin").get<Pose>();
    jt.lo = e.at("lo").get<double>();
    jt.hi = e.at("hi").get<double>();
    joints.push_back(jt);
  }
  const Pose base = j.contains("base") ? j.at("base").get<Pose>() : Pose{};
  const Pose tool = j.contains("tool") ? j.at("tool").get<Pose>() : Pose{};
  std::optional<JointConfig> home;
  if (j.contains("home")) home = joint_config_from_json(j.at("home"));
  return ManipulatorModel(j.value("name", "custom"), std::move(joints), base, tool, home);
}

void to_json(nlohmann::json& j, const IkSettings& s) {
  j = nlohmann::json{{"damping", s.damping},
                     {"max_step", s.max_step},
                     {"max_iterations", s.max_iterations},
                     {"tolerance", s.tolerance}};
}

void from_json(const nlohmann::json& j, IkSettings& s) {
  s.damping = j.value("damping", s.damping);
  s.max_step = j.value("max_step", s.max_step);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.tolerance = j.value("tolerance", s.tolerance);
}

}  // namespace demosuff
