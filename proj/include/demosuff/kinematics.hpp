#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "demosuff/pose.hpp"

namespace demosuff {

inline constexpr int kMaxJoints = 12;

// Fixed-capacity storage keeps the tracking loop free of heap allocation.
using JointConfig = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxJoints, 1>;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, kMaxJoints>;

enum class JointKind { revolute, prismatic };

struct Joint {
  JointKind kind = JointKind::revolute;
  Eigen::Vector3d axis{0.0, 0.0, 1.0};
  Pose origin;  // fixed transform from the previous joint frame
  double lo = 0.0;
  double hi = 0.0;
};

class ManipulatorModel {
 public:
  /// Throws std::invalid_argument unless there are 2..kMaxJoints joints with lo < hi.
  ManipulatorModel(std::string name, std::vector<Joint> joints, Pose base = {}, Pose tool = {},
                   std::optional<JointConfig> home = std::nullopt);

  const std::string& name() const { return name_; }
  const std::vector<Joint>& joints() const { return joints_; }
  int dof() const { return static_cast<int>(joints_.size()); }
  const Pose& base() const { return base_; }
  const Pose& tool() const { return tool_; }
  const JointConfig& home() const { return home_; }
  bool within_limits(const JointConfig& q) const;

 private:
  std::string name_;
  std::vector<Joint> joints_;
  Pose base_;
  Pose tool_;
  JointConfig home_;
};

/// Bundled models by id: "planar-2r" (unit links, for tests), "planar-3r", "baxter-like-7dof".
ManipulatorModel builtin_model(const std::string& id);
std::vector<std::string> builtin_model_ids();

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tracking was asked to start from a configuration that does not realise the first waypoint.
class StartMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Pose forward_kinematics(const ManipulatorModel& m, const JointConfig& q);

/// Geometric Jacobian in the base frame: rows 0..2 map joint rates to the linear
/// velocity of the tool-frame origin, rows 3..5 to the angular velocity.
Jacobian jacobian(const ManipulatorModel& m, const JointConfig& q);

struct IkSettings {
  double damping = 1e-4;       // lambda in (J^T J + lambda^2 I)
  double max_step = 0.2;       // per-iteration clamp on |dq|_inf
  int max_iterations = 200;    // per waypoint
  double tolerance = 1e-4;     // pose_distance
};

enum class TrackStatus { success, joint_limit_violation, ik_divergence };
const char* to_string(TrackStatus s);

struct Waypoint {
  Pose pose;
  int segment = 0;
};

struct TrackResult {
  TrackStatus status = TrackStatus::success;
  std::vector<JointConfig> joint_path;  // one entry per reached waypoint
  std::optional<std::size_t> failed_waypoint_index;
  std::optional<int> failed_segment_index;

  bool ok() const { return status == TrackStatus::success; }
};

struct IkResult {
  TrackStatus status = TrackStatus::success;
  JointConfig q;
  int iterations = 0;
};

/// Damped-least-squares convergence from `seed` to a single target. A converged
/// configuration outside the joint limits is a hard failure, never clamped.
IkResult solve_ik(const ManipulatorModel& m, const JointConfig& seed, const Pose& target, const IkSettings& s = {});

/// Resolved-rate tracking through `waypoints` in order. Throws StartMismatch when
/// FK(q0) is not within tolerance of the first waypoint or q0 violates the limits.
TrackResult track_pose_path(const ManipulatorModel& m, const JointConfig& q0, std::span<const Waypoint> waypoints,
                            const IkSettings& s = {});

void to_json(nlohmann::json& j, const ManipulatorModel& m);
ManipulatorModel model_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const IkSettings& s);
void from_json(const nlohmann::json& j, IkSettings& s);

nlohmann::json joint_config_to_json(const JointConfig& q);
JointConfig joint_config_from_json(const nlohmann::json& j);

}  // namespace demosuff
