#include "demosuff/planner.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "demosuff/screw.hpp"

namespace demosuff {

std::vector<Pose> transfer_guiding_poses(const Demonstration& demo, const TaskInstance& target) {
  if (target.object_count() != demo.anchor().object_count())
    throw std::invalid_argument("task instance and demonstration anchor have different object counts");
  std::vector<Pose> out;
  out.reserve(demo.object_frame_guides().size());
  for (const Pose& g : demo.object_frame_guides()) out.push_back(target.primary() * g);
  return out;
}

std::vector<Waypoint> discretize_screw_path(std::span<const Pose> guides, double max_step) {
  if (guides.empty()) return {};
  if (!(max_step > 0.0)) throw std::invalid_argument("waypoint step must be positive");
  std::vector<Waypoint> out{{guides[0], 0}};
  for (std::size_t i = 0; i + 1 < guides.size(); ++i) {
    const int seg = static_cast<int>(i);
    const ScrewPath path(guides[i], guides[i + 1]);
    // The frame origin moves along a helix, so bound the step by its arc length
    // rather than by the endpoint chord.
    const ScrewParameters& sc = path.screw();
    const double radius = sc.is_pure_translation ? 0.0 : sc.axis_point.norm();
    const double arc = std::hypot(sc.translation_along_axis, sc.angle * radius);
    const int n = std::max(1, static_cast<int>(std::ceil(std::max(sc.angle, arc) / max_step)));
    for (int k = 1; k < n; ++k) out.push_back({path.at(static_cast<double>(k) / n), seg});
    out.push_back({guides[i + 1], seg});
  }
  return out;
}

TrackResult plan_through_guides(const ManipulatorModel& m, std::span<const Pose> guides, const PlannerSettings& s) {
  if (guides.empty()) throw std::invalid_argument("no guiding poses to plan through");
  const JointConfig home = s.home.value_or(m.home());
  const IkResult start = solve_ik(m, home, guides.front(), s.ik);
  if (start.status != TrackStatus::success) {
    TrackResult r;
    r.status = start.status;
    r.failed_waypoint_index = 0;
    r.failed_segment_index = 0;
    return r;
  }
  const std::vector<Waypoint> wps = discretize_screw_path(guides, s.waypoint_step);
  return track_pose_path(m, start.q, wps, s.ik);
}

PlanAttempt has_motion_plan(const TaskInstance& x, const Demonstration& demo, const ManipulatorModel& m,
                            const PlannerSettings& s, std::size_t demo_index) {
  PlanAttempt a;
  a.transferred_guides = transfer_guiding_poses(demo, x);
  a.track = plan_through_guides(m, a.transferred_guides, s);
  a.feasible = a.track.ok();
  a.demonstration_id = demo.id();
  a.demonstration_index = demo_index;
  return a;
}

CoverageCheck covered(const TaskInstance& x, std::span<const Demonstration> demos, const ManipulatorModel& m,
                      const PlannerSettings& s) {
  if (demos.empty()) throw std::invalid_argument("coverage needs at least one demonstration");
  CoverageCheck best;
  bool have = false;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    PlanAttempt a = has_motion_plan(x, demos[i], m, s, i);
    if (a.feasible) return {true, std::move(a)};
    if (!have || a.track.failed_segment_index.value_or(0) < best.attempt.track.failed_segment_index.value_or(0)) {
      best.attempt = std::move(a);
      have = true;
    }
  }
  return best;
}

void to_json(nlohmann::json& j, const PlannerSettings& s) {
  j = nlohmann::json{{"ik", s.ik}, {"waypoint_step", s.waypoint_step}};
  if (s.home) j["home"] = joint_config_to_json(*s.home);
}

void from_json(const nlohmann::json& j, PlannerSettings& s) {
  if (j.contains("ik")) s.ik = j.at("ik").get<IkSettings>();
  s.waypoint_step = j.value("waypoint_step", s.waypoint_step);
  if (j.contains("home")) s.home = joint_config_from_json(j.at("home"));
}

void to_json(nlohmann::json& j, const PlanAttempt& a) {
  auto path = nlohmann::json::array();
  for (const auto& q : a.track.joint_path) path.push_back(joint_config_to_json(q));
  j = nlohmann::json{{"feasible", a.feasible},
                     {"status", to_string(a.track.status)},
                     {"demonstration_id", a.demonstration_id},
                     {"demonstration_index", a.demonstration_index},
                     {"transferred_guides", a.transferred_guides},
                     {"joint_path", path},
                     {"failed_waypoint_index", nullptr},
                     {"failed_segment_index", nullptr}};
  if (a.track.failed_waypoint_index) j["failed_waypoint_index"] = *a.track.failed_waypoint_index;
  if (a.track.failed_segment_index) j["failed_segment_index"] = *a.track.failed_segment_index;
}

std::string waypoint_dump_csv(std::span<const Waypoint> waypoints, const TrackResult& track) {
  std::ostringstream os;
  os.precision(17);
  os << "segment_index,qw,qx,qy,qz,x,y,z,joints\n";
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Pose& p = waypoints[i].pose;
    os << waypoints[i].segment << ',' << p.rotation().w() << ',' << p.rotation().x() << ',' << p.rotation().y() << ','
       << p.rotation().z() << ',' << p.translation().x() << ',' << p.translation().y() << ',' << p.translation().z()
       << ',';
    if (i < track.joint_path.size()) {
      const JointConfig& q = track.joint_path[i];
      for (int k = 0; k < q.size(); ++k) os << (k ? " " : "") << q[k];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace demosuff
