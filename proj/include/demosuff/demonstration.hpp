#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

#include "demosuff/kinematics.hpp"
#include "demosuff/pose.hpp"

namespace demosuff {

// Poses of the task-relevant objects; object_poses[0] anchors demonstration frames.
struct TaskInstance {
  std::vector<Pose> object_poses;

  TaskInstance() = default;
  explicit TaskInstance(Pose p) : object_poses{p} {}
  explicit TaskInstance(std::vector<Pose> poses) : object_poses(std::move(poses)) {}

  const Pose& primary() const { return object_poses.at(0); }
  std::size_t object_count() const { return object_poses.size(); }
};

// A recorded demonstration: the raw joint trajectory, the guiding poses extracted
// from it (robot base frame) and the same guides expressed in the anchor object's
// frame, which is what transfers to new task instances.
class Demonstration {
 public:
  Demonstration() = default;

  /// Builds the base-frame guides as anchor · object_frame_guides[i].
  /// Throws std::invalid_argument on fewer than two guides or repeated consecutive guides.
  static Demonstration from_object_frame(std::string id, TaskInstance anchor, std::vector<Pose> object_frame_guides,
                                         std::vector<JointConfig> joint_trajectory = {});
  /// Builds the object-frame guides as anchor⁻¹ · guiding_poses[i].
  static Demonstration from_base_frame(std::string id, TaskInstance anchor, std::vector<Pose> guiding_poses,
                                       std::vector<JointConfig> joint_trajectory = {});

  const std::string& id() const { return id_; }
  const TaskInstance& anchor() const { return anchor_; }
  const std::vector<Pose>& guiding_poses() const { return guides_; }
  const std::vector<Pose>& object_frame_guides() const { return object_guides_; }
  const std::vector<JointConfig>& joint_trajectory() const { return joint_trajectory_; }
  int segment_count() const { return static_cast<int>(guides_.size()) - 1; }

 private:
  std::string id_;
  TaskInstance anchor_;
  std::vector<Pose> guides_;
  std::vector<Pose> object_guides_;
  std::vector<JointConfig> joint_trajectory_;
};

inline constexpr double kDefaultSegmentationThreshold = 5e-3;

/// Greedy maximal cover of a pose path by constant-screw segments. Returns the
/// guiding poses: a subsequence of `path` starting at path.front() and ending at
/// path.back() such that every skipped pose lies within `threshold` of the
/// ScLERP path between its bracketing guides, and no segment can be extended by
/// one more pose without violating that bound.
std::vector<Pose> segment_into_screws(std::span<const Pose> path, double threshold = kDefaultSegmentationThreshold);

/// FK image of a joint trajectory followed by segmentation, anchored at `anchor`.
Demonstration demonstration_from_joint_trajectory(std::string id, const ManipulatorModel& m, TaskInstance anchor,
                                                  std::vector<JointConfig> trajectory,
                                                  double threshold = kDefaultSegmentationThreshold);

// How a simulated demonstrator orients a template at the anchor.
enum class HeadingPolicy {
  fixed,      // template used as written in the object frame
  face_base,  // template yawed about the object's z axis to face the robot base
};

struct DemoTemplate {
  std::string name;
  std::vector<Pose> waypoints_object_frame;
  HeadingPolicy heading = HeadingPolicy::fixed;
};

DemoTemplate load_template(const std::filesystem::path& file);
/// Looks `name` up as <data-dir>/templates/<name>.json, or treats it as a path.
DemoTemplate find_template(const std::string& name_or_path);
std::filesystem::path data_directory();

void to_json(nlohmann::json& j, const TaskInstance& x);
void from_json(const nlohmann::json& j, TaskInstance& x);
void to_json(nlohmann::json& j, const Demonstration& d);
void from_json(const nlohmann::json& j, Demonstration& d);
void to_json(nlohmann::json& j, const DemoTemplate& t);
void from_json(const nlohmann::json& j, DemoTemplate& t);

}  // namespace demosuff
