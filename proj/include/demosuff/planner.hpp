#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demosuff/demonstration.hpp"
#include "demosuff/kinematics.hpp"

namespace demosuff {

struct PlannerSettings {
  IkSettings ik;
  double waypoint_step = 0.02;  // max pose_distance between consecutive ScLERP waypoints
  std::optional<JointConfig> home;  // start of every attempt; model home when unset
};

struct PlanAttempt {
  bool feasible = false;
  TrackResult track;
  std::vector<Pose> transferred_guides;
  std::string demonstration_id;
  std::size_t demonstration_index = 0;
};

/// Re-anchors a demonstration at `target`: target.primary() · object_frame_guides[i].
/// Throws std::invalid_argument when the object counts differ.
std::vector<Pose> transfer_guiding_poses(const Demonstration& demo, const TaskInstance& target);

/// ScLERP waypoints through consecutive guides, each tagged with the index of the
/// segment that produced it. The first waypoint is guides[0] (segment 0) and every
/// guide appears exactly once.
std::vector<Waypoint> discretize_screw_path(std::span<const Pose> guides, double max_step);

/// Start-configuration policy plus tracking: converge from the home configuration
/// onto guides[0], then track the discretised screw path. A failure to reach the
/// first guide is reported against waypoint 0, segment 0.
TrackResult plan_through_guides(const ManipulatorModel& m, std::span<const Pose> guides, const PlannerSettings& s = {});

PlanAttempt has_motion_plan(const TaskInstance& x, const Demonstration& demo, const ManipulatorModel& m,
                            const PlannerSettings& s = {}, std::size_t demo_index = 0);

struct CoverageCheck {
  bool covered = false;
  PlanAttempt attempt;  // the success, or the failure with the earliest failed segment
};

/// Tries demonstrations in order and stops at the first feasible plan.
/// Throws std::invalid_argument on an empty set.
CoverageCheck covered(const TaskInstance& x, std::span<const Demonstration> demos, const ManipulatorModel& m,
                      const PlannerSettings& s = {});

void to_json(nlohmann::json& j, const PlannerSettings& s);
void from_json(const nlohmann::json& j, PlannerSettings& s);
void to_json(nlohmann::json& j, const PlanAttempt& a);

/// CSV rows of (segment_index, pose, joint config) for a planned path.
std::string waypoint_dump_csv(std::span<const Waypoint> waypoints, const TrackResult& track);

}  // namespace demosuff
