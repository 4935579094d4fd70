#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>

#include "demosuff/demonstration.hpp"
#include "demosuff/planner.hpp"
#include "demosuff/region.hpp"

namespace demosuff {

// What the learner asks for: a failing task instance inside the region it wants covered.
struct Suggestion {
  TaskInstance instance;
  Region region;
  int arm = 0;
  int iteration = 0;
  std::string demo_id;  // id the returned demonstration should carry
};

// Produces a demonstration near the suggestion, or refuses (std::nullopt). The
// returned anchor may differ from the suggested instance but lies in the work area.
class Teacher {
 public:
  virtual ~Teacher() = default;
  virtual std::optional<Demonstration> request(const Suggestion& s, Rng& rng) = 0;
};

/// Gaussian placement error on the non-degenerate position dimensions, clamped to `area`.
TaskInstance perturb_placement(const TaskInstance& x, const Region& area, double noise_std, Rng& rng);

// Stands in for a kinesthetic demonstrator: instantiates a waypoint template at the
// (noisy) placement and records the joint trajectory the arm would follow. Refuses
// when the arm cannot execute the template there.
class SimulatedTeacher : public Teacher {
 public:
  SimulatedTeacher(DemoTemplate tpl, ManipulatorModel model, PlannerSettings settings, Region work_area,
                   double placement_noise);

  std::optional<Demonstration> request(const Suggestion& s, Rng& rng) override;

  /// Demonstration exactly at `anchor`, or nullopt when it cannot be executed.
  std::optional<Demonstration> demonstrate_at(const TaskInstance& anchor, const std::string& id) const;
  /// Object-frame guides the teacher would use at `anchor` (template after heading policy).
  std::vector<Pose> object_frame_waypoints(const TaskInstance& anchor) const;

  const DemoTemplate& demo_template() const { return template_; }

 private:
  DemoTemplate template_;
  ManipulatorModel model_;
  PlannerSettings settings_;
  Region work_area_;
  double noise_;
};

// Teacher for synthetic worlds whose coverage depends only on demonstration anchors.
class AnchorTeacher : public Teacher {
 public:
  AnchorTeacher(Region work_area, double placement_noise) : work_area_(work_area), noise_(placement_noise) {}
  std::optional<Demonstration> request(const Suggestion& s, Rng& rng) override;
  static Demonstration at(const TaskInstance& anchor, const std::string& id);

 private:
  Region work_area_;
  double noise_;
};

// A human answering through the service: request() publishes the suggestion and
// blocks until submit() delivers an answer, cancel() is called, or the timeout
// elapses. Timeouts and cancellations count as refusals.
class InteractiveTeacher : public Teacher {
 public:
  explicit InteractiveTeacher(std::chrono::milliseconds timeout) : timeout_(timeout) {}

  std::optional<Demonstration> request(const Suggestion& s, Rng& rng) override;

  std::optional<Suggestion> pending() const;
  /// Answers the pending suggestion (nullopt = refuse). False if nothing is pending.
  bool submit(std::optional<Demonstration> answer);
  void cancel();

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::chrono::milliseconds timeout_;
  std::optional<Suggestion> pending_;
  std::optional<std::optional<Demonstration>> answer_;
  bool cancelled_ = false;
};

}  // namespace demosuff
