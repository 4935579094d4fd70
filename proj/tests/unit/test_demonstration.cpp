#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "demosuff/demonstration.hpp"
#include "demosuff/screw.hpp"
#include "demosuff/teacher.hpp"
#include "test_util.hpp"

using namespace demosuff;
using demosuff::testing::random_pose;

namespace {

// Samples g0 · exp(τ s) at τ = k/(n-1), optionally skipping τ = 0.
std::vector<Pose> screw_samples(const Pose& g0, const Pose& rel, int n, bool include_start = true) {
  std::vector<Pose> out;
  const ScrewParameters s = screw_log(rel);
  for (int k = include_start ? 0 : 1; k < n; ++k) out.push_back(g0 * screw_exp(s, static_cast<double>(k) / (n - 1)));
  return out;
}

// A random relative motion large enough that two of them never share a screw.
Pose big_motion(Rng& rng) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  const Eigen::Vector3d t(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  return Pose::from_axis_angle(axis.normalized(), rng.uniform(0.5, 1.5), t);
}

std::vector<Pose> multi_screw_path(Rng& rng, int screws, int per_screw, std::vector<std::size_t>* junctions) {
  std::vector<Pose> path{random_pose(rng)};
  for (int s = 0; s < screws; ++s) {
    const Pose start = path.back();
    const auto seg = screw_samples(start, big_motion(rng), per_screw + 1, false);
    path.insert(path.end(), seg.begin(), seg.end());
    if (junctions) junctions->push_back(path.size() - 1);
  }
  return path;
}

Pose jitter(const Pose& p, double magnitude, Rng& rng) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  Eigen::Vector3d t(rng.normal(), rng.normal(), rng.normal());
  return p * Pose::from_axis_angle(axis.normalized(), magnitude * rng.uniform(), magnitude * rng.uniform() * t.normalized());
}

// Dense ScLERP sampling, independent of ScrewPath's line search.
double dense_distance(const Pose& a, const Pose& b, const Pose& p, int n = 4000) {
  double best = 1e300;
  for (int k = 0; k <= n; ++k) best = std::min(best, pose_distance(sclerp(a, b, static_cast<double>(k) / n), p));
  return best;
}

std::size_t index_in(const std::vector<Pose>& path, const Pose& g, std::size_t from) {
  for (std::size_t i = from; i < path.size(); ++i) {
    if (pose_distance(path[i], g) < 1e-12) return i;
  }
  return path.size();
}

}  // namespace

TEST_CASE("single constant screw yields its two endpoints") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose g0 = random_pose(rng);
    const auto path = screw_samples(g0, big_motion(rng), 50);
    const auto guides = segment_into_screws(path, 1e-6);
    REQUIRE(guides.size() == 2);
    CHECK(pose_distance(guides[0], path.front()) < 1e-12);
    CHECK(pose_distance(guides[1], path.back()) < 1e-12);
    // Constant-screw linearity: the samples are ScLERP of the endpoints at k/49.
    for (std::size_t k = 0; k < path.size(); ++k)
      CHECK(pose_distance(sclerp(guides[0], guides[1], k / 49.0), path[k]) < 1e-9);
  }
}

TEST_CASE("two and three screws are split at the junctions") {
  Rng rng(5);
  for (int screws = 2; screws <= 3; ++screws) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::size_t> junctions;
      const auto path = multi_screw_path(rng, screws, screws == 2 ? 30 : 20, &junctions);
      const auto guides = segment_into_screws(path, 1e-6);
      REQUIRE(guides.size() == static_cast<std::size_t>(screws + 1));
      CHECK(pose_distance(guides.front(), path.front()) < 1e-12);
      for (int j = 0; j < screws; ++j) CHECK(pose_distance(guides[j + 1], path[junctions[j]]) < 1e-12);
    }
  }
}

TEST_CASE("noise below the threshold does not split a screw") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto path = screw_samples(random_pose(rng), big_motion(rng), 50);
    for (auto& p : path) p = jitter(p, 1e-4, rng);
    const auto guides = segment_into_screws(path, 1e-3);
    CHECK(guides.size() == 2);
  }
}

TEST_CASE("segmentation properties on noisy multi-screw paths") {
  Rng rng(21);
  const double threshold = 5e-3;
  for (int trial = 0; trial < 8; ++trial) {
    auto path = multi_screw_path(rng, 3, 15, nullptr);
    for (auto& p : path) p = jitter(p, 1e-3, rng);
    const auto guides = segment_into_screws(path, threshold);
    REQUIRE(guides.size() >= 2);
    CHECK(pose_distance(guides.front(), path.front()) < 1e-12);
    CHECK(pose_distance(guides.back(), path.back()) < 1e-12);

    // Subsequence, reconstruction and maximality.
    std::size_t prev = 0;
    for (std::size_t g = 1; g < guides.size(); ++g) {
      const std::size_t idx = index_in(path, guides[g], prev + 1);
      REQUIRE(idx < path.size());
      for (std::size_t k = prev + 1; k < idx; ++k)
        CHECK(dense_distance(guides[g - 1], guides[g], path[k]) < threshold + 1e-4);
      if (idx + 1 < path.size()) {
        const ScrewPath longer(path[prev], path[idx + 1]);
        double worst = 0.0;
        for (std::size_t k = prev + 1; k <= idx; ++k) worst = std::max(worst, longer.distance_to(path[k]));
        CHECK(worst > threshold);
      }
      prev = idx;
    }

    const auto again = segment_into_screws(guides, threshold);
    REQUIRE(again.size() == guides.size());
    for (std::size_t i = 0; i < guides.size(); ++i) CHECK(pose_distance(again[i], guides[i]) < 1e-15);
  }
}

TEST_CASE("segmentation preconditions") {
  const std::vector<Pose> one{Pose::identity()};
  CHECK_THROWS_AS(segment_into_screws(one), std::invalid_argument);
  const std::vector<Pose> two{Pose::identity(), Pose::from_translation({1.0, 0.0, 0.0})};
  CHECK_THROWS_AS(segment_into_screws(two, 0.0), std::invalid_argument);
  CHECK(segment_into_screws(two).size() == 2);
}

TEST_CASE("demonstration frame-change consistency") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const TaskInstance anchor(random_pose(rng));
    std::vector<Pose> guides{random_pose(rng), random_pose(rng), random_pose(rng)};
    const Demonstration d = Demonstration::from_base_frame("d", anchor, guides);
    CHECK(d.segment_count() == 2);
    for (std::size_t i = 0; i < guides.size(); ++i) {
      CHECK(pose_distance(anchor.primary() * d.object_frame_guides()[i], guides[i]) < 1e-9);
      CHECK(pose_distance(anchor.primary().inverse() * guides[i], d.object_frame_guides()[i]) < 1e-12);
    }
    const Demonstration e = Demonstration::from_object_frame("e", anchor, d.object_frame_guides());
    for (std::size_t i = 0; i < guides.size(); ++i) CHECK(pose_distance(e.guiding_poses()[i], guides[i]) < 1e-9);
  }
}

TEST_CASE("demonstration invariants are enforced") {
  const TaskInstance anchor(Pose::identity());
  CHECK_THROWS_AS(Demonstration::from_object_frame("a", anchor, {Pose::identity()}), std::invalid_argument);
  CHECK_THROWS_AS(Demonstration::from_object_frame("a", anchor, {Pose::identity(), Pose::identity()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Demonstration::from_object_frame("a", TaskInstance{}, {Pose::identity(), Pose::from_translation({1, 0, 0})}),
                  std::invalid_argument);
}

TEST_CASE("guides extracted from a joint trajectory lie on its FK image") {
  const ManipulatorModel m = builtin_model("baxter-like-7dof");
  std::vector<JointConfig> traj;
  JointConfig q = m.home();
  for (int k = 0; k < 40; ++k) {
    traj.push_back(q);
    q[0] += k < 20 ? 0.01 : 0.0;
    q[3] += k < 20 ? 0.0 : -0.01;
  }
  const Demonstration d = demonstration_from_joint_trajectory("j", m, TaskInstance(Pose::identity()), traj);
  CHECK(d.joint_trajectory().size() == traj.size());
  CHECK(d.segment_count() >= 2);
  std::size_t from = 0;
  for (const Pose& g : d.guiding_poses()) {
    bool found = false;
    for (; from < traj.size() && !found; ++from) found = pose_distance(forward_kinematics(m, traj[from]), g) < 1e-9;
    CHECK(found);
  }
}

TEST_CASE("demonstration JSON round trip") {
  Rng rng(2);
  const Demonstration d = Demonstration::from_object_frame("demo-7", TaskInstance(random_pose(rng)),
                                                           {random_pose(rng), random_pose(rng)},
                                                           {builtin_model("planar-2r").home()});
  const nlohmann::json j = d;
  CHECK(j.contains("anchor"));
  CHECK(j.contains("guides_object_frame"));
  CHECK(j.contains("joint_traj"));
  const Demonstration e = nlohmann::json::parse(j.dump()).get<Demonstration>();
  CHECK(e.id() == "demo-7");
  CHECK(e.joint_trajectory().size() == 1);
  for (std::size_t i = 0; i < 2; ++i) CHECK(pose_distance(e.guiding_poses()[i], d.guiding_poses()[i]) < 1e-12);
}

TEST_CASE("bundled templates load") {
  for (const char* name : {"pour", "scoop", "planar_scoop"}) {
    const DemoTemplate t = find_template(name);
    CHECK(t.name == name);
    CHECK(t.waypoints_object_frame.size() >= 2);
  }
  CHECK_THROWS_AS(find_template("no-such-template"), std::invalid_argument);
}

TEST_CASE("simulated teacher") {
  const ManipulatorModel m = builtin_model("baxter-like-7dof");
  Region area;
  area.pos_min = {0.71, -0.24, 0.1};
  area.pos_max = {1.08, 0.78, 0.1};
  const DemoTemplate scoop = find_template("scoop");
  SimulatedTeacher teacher(scoop, m, {}, area, 0.0);
  Rng rng(1);

  SUBCASE("zero noise keeps the suggested anchor") {
    Suggestion s{TaskInstance(Pose::from_translation({0.9, 0.3, 0.1})), area, 0, 0, "d0"};
    const auto d = teacher.request(s, rng);
    REQUIRE(d.has_value());
    CHECK(pose_distance(d->anchor().primary(), s.instance.primary()) == 0.0);
    CHECK(d->id() == "d0");
    CHECK(d->segment_count() == static_cast<int>(scoop.waypoints_object_frame.size()) - 1);
    CHECK(!d->joint_trajectory().empty());
    // The recorded trajectory ends at the last guide.
    CHECK(pose_distance(forward_kinematics(m, d->joint_trajectory().back()), d->guiding_poses().back()) < 1e-4);
  }
  SUBCASE("unreachable anchor is a refusal") {
    Suggestion s{TaskInstance(Pose::from_translation({10.8, 0.3, 0.1})), area, 0, 0, "far"};
    CHECK_FALSE(teacher.request(s, rng).has_value());
  }
  SUBCASE("placement noise stays inside the work area") {
    SimulatedTeacher noisy(scoop, m, {}, area, 0.05);
    for (int i = 0; i < 200; ++i) {
      const TaskInstance x = perturb_placement(TaskInstance(Pose::from_translation({0.72, -0.2, 0.1})), area, 0.05, rng);
      CHECK(area.contains(x.primary().translation()));
    }
  }
}
