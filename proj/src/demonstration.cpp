#include "demosuff/demonstration.hpp"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "demosuff/screw.hpp"

namespace demosuff {

namespace {

constexpr double kSamePose = 1e-12;

void check_guides(const std::vector<Pose>& guides) {
  if (guides.size() < 2) throw std::invalid_argument("a demonstration needs at least two guiding poses");
  for (std::size_t i = 1; i < guides.size(); ++i) {
    if (pose_distance(guides[i - 1], guides[i]) < kSamePose)
      throw std::invalid_argument("consecutive guiding poses must differ");
  }
}

}  // namespace

Demonstration Demonstration::from_object_frame(std::string id, TaskInstance anchor, std::vector<Pose> object_frame_guides,
                                               std::vector<JointConfig> joint_trajectory) {
  if (anchor.object_poses.empty()) throw std::invalid_argument("demonstration anchor has no objects");
  Demonstration d;
  d.id_ = std::move(id);
  d.anchor_ = std::move(anchor);
  d.object_guides_ = std::move(object_frame_guides);
  d.guides_.reserve(d.object_guides_.size());
  for (const Pose& g : d.object_guides_) d.guides_.push_back(d.anchor_.primary() * g);
  d.joint_trajectory_ = std::move(joint_trajectory);
  check_guides(d.guides_);
  return d;
}

Demonstration Demonstration::from_base_frame(std::string id, TaskInstance anchor, std::vector<Pose> guiding_poses,
                                             std::vector<JointConfig> joint_trajectory) {
  if (anchor.object_poses.empty()) throw std::invalid_argument("demonstration anchor has no objects");
  check_guides(guiding_poses);
  Demonstration d;
  d.id_ = std::move(id);
  d.anchor_ = std::move(anchor);
  d.guides_ = std::move(guiding_poses);
  const Pose inv = d.anchor_.primary().inverse();
  for (const Pose& g : d.guides_) d.object_guides_.push_back(inv * g);
  d.joint_trajectory_ = std::move(joint_trajectory);
  return d;
}

std::vector<Pose> segment_into_screws(std::span<const Pose> path, double threshold) {
  if (path.size() < 2) throw std::invalid_argument("segmentation needs a path of at least two poses");
  if (!(threshold > 0.0)) throw std::invalid_argument("segmentation threshold must be positive");

  const std::size_t n = path.size();
  std::vector<Pose> guides{path.front()};
  std::size_t start = 0;
  auto fits = [&](std::size_t from, std::size_t to) {
    const ScrewPath screw(path[from], path[to]);
    // Later poses are the likeliest to break the fit, so test them first.
    for (std::size_t k = to - 1; k > from; --k) {
      if (screw.distance_to(path[k]) > threshold) return false;
    }
    return true;
  };
  for (std::size_t end = start + 2; end < n; ++end) {
    if (fits(start, end)) continue;
    start = end - 1;
    if (pose_distance(guides.back(), path[start]) >= kSamePose) guides.push_back(path[start]);
    end = start + 1;
  }
  if (pose_distance(guides.back(), path.back()) >= kSamePose || guides.size() == 1) guides.push_back(path.back());
  return guides;
}

Demonstration demonstration_from_joint_trajectory(std::string id, const ManipulatorModel& m, TaskInstance anchor,
                                                  std::vector<JointConfig> trajectory, double threshold) {
  std::vector<Pose> poses;
  poses.reserve(trajectory.size());
  for (const auto& q : trajectory) poses.push_back(forward_kinematics(m, q));
  return Demonstration::from_base_frame(std::move(id), std::move(anchor), segment_into_screws(poses, threshold),
                                        std::move(trajectory));
}

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("DEMOSUFF_DATA")) return env;
  return DEMOSUFF_DATA_DIR;
}

DemoTemplate load_template(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open template file " + file.string());
  return nlohmann::json::parse(in).get<DemoTemplate>();
}

DemoTemplate find_template(const std::string& name_or_path) {
  const std::filesystem::path bundled = data_directory() / "templates" / (name_or_path + ".json");
  if (std::filesystem::exists(bundled)) return load_template(bundled);
  if (std::filesystem::exists(name_or_path)) return load_template(name_or_path);
  throw std::invalid_argument("unknown template: " + name_or_path);
}

void to_json(nlohmann::json& j, const TaskInstance& x) { j = nlohmann::json{{"object_poses", x.object_poses}}; }

void from_json(const nlohmann::json& j, TaskInstance& x) {
  x.object_poses = j.at("object_poses").get<std::vector<Pose>>();
  if (x.object_poses.empty()) throw std::invalid_argument("task instance needs at least one object pose");
}

void to_json(nlohmann::json& j, const Demonstration& d) {
  auto traj = nlohmann::json::array();
  for (const auto& q : d.joint_trajectory()) traj.push_back(joint_config_to_json(q));
  j = nlohmann::json{{"id", d.id()}, {"anchor", d.anchor()}, {"guides_object_frame", d.object_frame_guides()},
                     {"joint_traj", traj}};
}

void from_json(const nlohmann::json& j, Demonstration& d) {
  std::vector<JointConfig> traj;
  if (j.contains("joint_traj")) {
    for (const auto& q : j.at("joint_traj")) traj.push_back(joint_config_from_json(q));
  }
  d = Demonstration::from_object_frame(j.value("id", ""), j.at("anchor").get<TaskInstance>(),
                                       j.at("guides_object_frame").get<std::vector<Pose>>(), std::move(traj));
}

void to_json(nlohmann::json& j, const DemoTemplate& t) {
  j = nlohmann::json{{"name", t.name},
                     {"waypoints_object_frame", t.waypoints_object_frame},
                     {"heading", t.heading == HeadingPolicy::face_base ? "face_base" : "fixed"}};
}

void from_json(const nlohmann::json& j, DemoTemplate& t) {
  t.name = j.at("name").get<std::string>();
  t.waypoints_object_frame = j.at("waypoints_object_frame").get<std::vector<Pose>>();
  if (t.waypoints_object_frame.size() < 2) throw std::invalid_argument("template needs at least two waypoints");
  const std::string h = j.value("heading", "fixed");
  if (h != "fixed" && h != "face_base") throw std::invalid_argument("template heading must be fixed|face_base");
  t.heading = h == "face_base" ? HeadingPolicy::face_base : HeadingPolicy::fixed;
}

}  // namespace demosuff
