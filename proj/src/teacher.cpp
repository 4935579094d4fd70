#include "demosuff/teacher.hpp"

#include <cmath>

namespace demosuff {

TaskInstance perturb_placement(const TaskInstance& x, const Region& area, double noise_std, Rng& rng) {
  if (noise_std <= 0.0) return x;
  TaskInstance out = x;
  Pose& p = out.object_poses.at(0);
  Eigen::Vector3d t = p.translation();
  for (int i = 0; i < 3; ++i) {
    if (area.pos_max[i] > area.pos_min[i]) t[i] += rng.normal(0.0, noise_std);
  }
  p = Pose(p.rotation(), area.clamp(t));
  return out;
}

SimulatedTeacher::SimulatedTeacher(DemoTemplate tpl, ManipulatorModel model, PlannerSettings settings, Region work_area,
                                   double placement_noise)
    : template_(std::move(tpl)),
      model_(std::move(model)),
      settings_(std::move(settings)),
      work_area_(work_area),
      noise_(placement_noise) {}

std::vector<Pose> SimulatedTeacher::object_frame_waypoints(const TaskInstance& anchor) const {
  if (template_.heading == HeadingPolicy::fixed) return template_.waypoints_object_frame;
  // Yaw the template so its +x axis points from the robot base towards the object.
  const Pose& obj = anchor.primary();
  const Eigen::Vector3d d = obj.rotation().conjugate() * (obj.translation() - model_.base().translation());
  const Pose yaw = Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), std::atan2(d.y(), d.x()));
  std::vector<Pose> out;
  out.reserve(template_.waypoints_object_frame.size());
  for (const Pose& w : template_.waypoints_object_frame) out.push_back(yaw * w);
  return out;
}

std::optional<Demonstration> SimulatedTeacher::demonstrate_at(const TaskInstance& anchor, const std::string& id) const {
  std::vector<Pose> guides;
  const std::vector<Pose> local = object_frame_waypoints(anchor);
  guides.reserve(local.size());
  for (const Pose& w : local) guides.push_back(anchor.primary() * w);
  TrackResult track = plan_through_guides(model_, guides, settings_);
  if (!track.ok()) return std::nullopt;
  return Demonstration::from_object_frame(id, anchor, local, std::move(track.joint_path));
}

std::optional<Demonstration> SimulatedTeacher::request(const Suggestion& s, Rng& rng) {
  return demonstrate_at(perturb_placement(s.instance, work_area_, noise_, rng), s.demo_id);
}

Demonstration AnchorTeacher::at(const TaskInstance& anchor, const std::string& id) {
  return Demonstration::from_object_frame(id, anchor, {Pose::identity(), Pose::from_translation({0.0, 0.0, 0.1})});
}

std::optional<Demonstration> AnchorTeacher::request(const Suggestion& s, Rng& rng) {
  return at(perturb_placement(s.instance, work_area_, noise_, rng), s.demo_id);
}

std::optional<Demonstration> InteractiveTeacher::request(const Suggestion& s, Rng&) {
  std::unique_lock lock(mu_);
  if (cancelled_) return std::nullopt;
  pending_ = s;
  answer_.reset();
  cv_.wait_for(lock, timeout_, [&] { return answer_.has_value() || cancelled_; });
  pending_.reset();
  std::optional<Demonstration> out;
  if (answer_) out = std::move(*answer_);
  answer_.reset();
  return out;
}

std::optional<Suggestion> InteractiveTeacher::pending() const {
  std::lock_guard lock(mu_);
  return pending_;
}

bool InteractiveTeacher::submit(std::optional<Demonstration> answer) {
  {
    std::lock_guard lock(mu_);
    if (!pending_ || answer_) return false;
    answer_ = std::move(answer);
  }
  cv_.notify_all();
  return true;
}

void InteractiveTeacher::cancel() {
  {
    std::lock_guard lock(mu_);
    cancelled_ = true;
  }
  cv_.notify_all();
}

}  // namespace demosuff
