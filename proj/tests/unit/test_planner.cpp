#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "demosuff/planner.hpp"
#include "demosuff/screw.hpp"
#include "demosuff/teacher.hpp"
#include "test_util.hpp"

using namespace demosuff;
using demosuff::testing::random_pose;

namespace {

Region planar_area() {
  Region r;
  r.pos_min = {0.55, -0.3, 0.0};
  r.pos_max = {0.77, 0.3, 0.0};
  return r;
}

Demonstration planar_demo(double x, double y, const std::string& id) {
  SimulatedTeacher t(find_template("planar_scoop"), builtin_model("planar-3r"), {}, planar_area(), 0.0);
  auto d = t.demonstrate_at(TaskInstance(Pose::from_translation({x, y, 0.0})), id);
  REQUIRE(d.has_value());
  return *d;
}

TaskInstance at(double x, double y) { return TaskInstance(Pose::from_translation({x, y, 0.0})); }

}  // namespace

TEST_CASE("guide transfer") {
  Rng rng(4);
  const TaskInstance anchor(random_pose(rng));
  const Demonstration d =
      Demonstration::from_base_frame("d", anchor, {random_pose(rng), random_pose(rng), random_pose(rng)});

  SUBCASE("identity") {
    const auto g = transfer_guiding_poses(d, anchor);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(pose_distance(g[i], d.guiding_poses()[i]) < 1e-12);
  }
  SUBCASE("translation equivariance") {
    const Eigen::Vector3d shift(0.1, 0.0, 0.0);
    const TaskInstance moved(Pose(anchor.primary().rotation(), anchor.primary().translation() + shift));
    const auto g = transfer_guiding_poses(d, moved);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK((g[i].translation() - d.guiding_poses()[i].translation() - shift).norm() < 1e-12);
      CHECK(rotation_distance(g[i].rotation(), d.guiding_poses()[i].rotation()) < 1e-12);
    }
  }
  SUBCASE("rotation about the vertical") {
    const Eigen::Matrix4d turn = Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi / 6).matrix();
    const Eigen::Matrix4d target = anchor.primary().matrix() * turn;
    const auto g = transfer_guiding_poses(d, TaskInstance(Pose::from_matrix(target)));
    for (std::size_t i = 0; i < g.size(); ++i) {
      // g = T · A⁻¹ · G in homogeneous matrices.
      const Eigen::Matrix4d expect = target * anchor.primary().matrix().inverse() * d.guiding_poses()[i].matrix();
      CHECK(demosuff::testing::matrix_pose_distance(g[i].matrix(), expect) < 1e-9);
    }
  }
  SUBCASE("object count mismatch") {
    const TaskInstance two(std::vector<Pose>{Pose::identity(), Pose::identity()});
    CHECK_THROWS_AS(transfer_guiding_poses(d, two), std::invalid_argument);
  }
}

TEST_CASE("screw path discretisation") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Pose> guides{random_pose(rng), random_pose(rng), random_pose(rng)};
    const auto wps = discretize_screw_path(guides, 0.02);
    REQUIRE(wps.size() >= 3);
    CHECK(pose_distance(wps.front().pose, guides[0]) < 1e-15);
    CHECK(pose_distance(wps.back().pose, guides[2]) < 1e-15);
    for (std::size_t i = 1; i < wps.size(); ++i) {
      CHECK(pose_distance(wps[i - 1].pose, wps[i].pose) <= 0.02 + 1e-9);
      CHECK(wps[i].segment >= wps[i - 1].segment);
    }
    // Screw preservation: every interior waypoint shares its segment's axis.
    for (const Waypoint& w : wps) {
      const int s = w.segment;
      const Pose& a = guides[s];
      const ScrewParameters full = screw_log(inverse(a) * guides[s + 1]);
      const ScrewParameters part = screw_log(inverse(a) * w.pose);
      if (full.is_pure_translation || part.angle < 1e-3 || part.is_identity) continue;
      CHECK((full.axis_direction - part.axis_direction).norm() < 1e-7);
      CHECK((full.axis_point - part.axis_point).norm() < 1e-7);
    }
  }
}

TEST_CASE("demonstration replays at its own anchor") {
  const Demonstration d = planar_demo(0.7, 0.0, "self");
  PlannerSettings s;
  s.home = d.joint_trajectory().front();
  const PlanAttempt a = has_motion_plan(d.anchor(), d, builtin_model("planar-3r"), s);
  CHECK(a.feasible);
  CHECK(a.track.status == TrackStatus::success);
  CHECK(a.demonstration_id == "self");
  // Default start policy too.
  CHECK(has_motion_plan(d.anchor(), d, builtin_model("planar-3r")).feasible);
}

TEST_CASE("far-away object is infeasible by divergence") {
  const Demonstration d = planar_demo(0.7, 0.0, "d");
  const PlanAttempt a = has_motion_plan(at(10.0, 0.0), d, builtin_model("planar-3r"));
  CHECK_FALSE(a.feasible);
  CHECK(a.track.status == TrackStatus::ik_divergence);
  CHECK(a.track.failed_segment_index == 0);
}

TEST_CASE("segment needing a joint past its limit is localised") {
  // Tool pointing along +x, moving inwards. With the tool yaw held at zero the
  // wrist sits at p - l3·x̂, and two-link IK gives the elbow angle for each
  // wrist distance. The elbow's upper limit is set just below what the last
  // guide needs, so the final segment must fail.
  const double l1 = 0.45, l2 = 0.35, l3 = 0.12;
  auto elbow = [&](double tool_x) {
    const double w = tool_x - l3;
    return std::acos((w * w - l1 * l1 - l2 * l2) / (2.0 * l1 * l2));
  };
  const std::vector<double> xs{0.85, 0.7, 0.6, 0.5};
  std::vector<Joint> joints = builtin_model("planar-3r").joints();
  for (Joint& j : joints) {
    j.lo = -std::numbers::pi;
    j.hi = std::numbers::pi;
  }
  joints[1].lo = 0.0;
  joints[1].hi = elbow(xs.back()) - 0.01;
  REQUIRE(elbow(xs[2]) < joints[1].hi);
  const ManipulatorModel m("engineered-3r", joints, {}, Pose::from_translation({l3, 0.0, 0.0}));

  std::vector<Pose> guides;
  for (double x : xs) guides.push_back(Pose::from_translation({x, 0.0, 0.0}));
  const Demonstration d = Demonstration::from_base_frame("e", TaskInstance(Pose::identity()), guides);

  const double e0 = elbow(xs[0]);
  const double q1 = -std::atan2(l2 * std::sin(e0), l1 + l2 * std::cos(e0));
  JointConfig home(3);
  home << q1, e0, -q1 - e0;
  REQUIRE(pose_distance(forward_kinematics(m, home), guides[0]) < 1e-12);
  PlannerSettings s;
  s.home = home;

  const PlanAttempt a = has_motion_plan(d.anchor(), d, m, s);
  CHECK_FALSE(a.feasible);
  CHECK(a.track.status == TrackStatus::joint_limit_violation);
  CHECK(a.track.failed_segment_index == 2);

  // Same path with the limit relaxed succeeds.
  joints[1].hi = std::numbers::pi;
  CHECK(has_motion_plan(d.anchor(), d, ManipulatorModel("relaxed", joints, {}, m.tool()), s).feasible);
}

TEST_CASE("covered") {
  const ManipulatorModel m = builtin_model("planar-3r");
  const Demonstration upper = planar_demo(0.6, 0.25, "upper");
  const Demonstration lower = planar_demo(0.7, -0.25, "lower");
  const TaskInstance x = at(0.7, -0.25);

  SUBCASE("empty set") { CHECK_THROWS_AS(covered(x, std::vector<Demonstration>{}, m), std::invalid_argument); }
  SUBCASE("anchor-matching demonstration") {
    CHECK(covered(x, std::vector<Demonstration>{lower}, m).covered);
  }
  SUBCASE("unreachable instance") {
    const CoverageCheck c = covered(at(5.0, 5.0), std::vector<Demonstration>{upper}, m);
    CHECK_FALSE(c.covered);
    CHECK_FALSE(c.attempt.feasible);
  }
  SUBCASE("only the second demonstration works") {
    REQUIRE_FALSE(has_motion_plan(x, upper, m).feasible);
    const CoverageCheck c = covered(x, std::vector<Demonstration>{upper, lower}, m);
    CHECK(c.covered);
    CHECK(c.attempt.demonstration_id == "lower");
    CHECK(c.attempt.demonstration_index == 1);
  }
  SUBCASE("all fail: earliest failed segment is reported") {
    const TaskInstance far = at(0.9, 0.6);
    const std::vector<Demonstration> ds{upper, lower};
    const CoverageCheck c = covered(far, ds, m);
    REQUIRE_FALSE(c.covered);
    int best = 1 << 30;
    for (const auto& d : ds) best = std::min(best, *has_motion_plan(far, d, m).track.failed_segment_index);
    CHECK(*c.attempt.track.failed_segment_index == best);
  }
}

TEST_CASE("coverage is monotone in the demonstration set") {
  const ManipulatorModel m = builtin_model("planar-3r");
  const std::vector<Demonstration> all{planar_demo(0.6, 0.25, "a"), planar_demo(0.7, -0.25, "b"),
                                       planar_demo(0.7, 0.0, "c")};
  Rng rng(12);
  const Region area = planar_area();
  for (int i = 0; i < 150; ++i) {
    const TaskInstance x(sample_region(area, rng));
    bool prev = false;
    for (std::size_t n = 1; n <= all.size(); ++n) {
      const bool now = covered(x, std::span<const Demonstration>(all.data(), n), m).covered;
      CHECK((!prev || now));
      prev = now;
    }
  }
}

TEST_CASE("plan attempts are deterministic") {
  const ManipulatorModel m = builtin_model("planar-3r");
  const Demonstration d = planar_demo(0.65, 0.1, "d");
  for (const TaskInstance& x : {at(0.6, -0.2), at(0.75, 0.25), at(0.7, 0.0)}) {
    const nlohmann::json a = has_motion_plan(x, d, m);
    const nlohmann::json b = has_motion_plan(x, d, m);
    CHECK(a.dump() == b.dump());
  }
}

TEST_CASE("waypoint dump") {
  const ManipulatorModel m = builtin_model("planar-3r");
  const Demonstration d = planar_demo(0.7, 0.0, "d");
  const auto wps = discretize_screw_path(d.guiding_poses(), 0.02);
  const TrackResult r = plan_through_guides(m, d.guiding_poses());
  const std::string csv = waypoint_dump_csv(wps, r);
  CHECK(csv.rfind("segment_index,", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == wps.size() + 1);
}
