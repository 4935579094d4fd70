#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "demosuff/coverage_bandit.hpp"
#include "demosuff/teacher.hpp"

namespace demosuff {

// What decides coverage: a simulated arm executing transferred plans, or a
// synthetic world where each demonstration covers a ball around its anchor.
struct WorldConfig {
  enum class Kind { planning, ball };
  Kind kind = Kind::planning;
  std::string model_id = "planar-3r";  // builtin name; empty when `model` came from JSON
  std::optional<ManipulatorModel> model;
  std::optional<DemoTemplate> demo_template;
  PlannerSettings planner;
  double radius = 0.1;  // ball worlds

  const ManipulatorModel& manipulator() const;
  const DemoTemplate& task_template() const;
};

struct TeacherConfig {
  enum class Kind { simulated, interactive };
  Kind kind = Kind::simulated;
  double placement_noise = 0.0;  // metres, std of the Gaussian placement error
  double timeout_s = 600.0;      // interactive only
};

struct AcquisitionConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double beta = 0.85;
  int K = 4;
  Region work_area;
  WorldConfig world;
  TeacherConfig teacher;
  std::vector<TaskInstance> initial_anchors;  // D_0, demonstrated without placement noise
  int max_demonstrations = 32;                // budget on |D|, D_0 included
  std::uint64_t seed = 1;
  bool record_samples = false;  // keep every bandit sample in the state JSON
  int threads = 1;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  /// Non-fatal problems, e.g. a stopping threshold 1 − ε − β ≤ 0.
  std::vector<std::string> warnings() const;
};

enum class Termination { none, sufficient, budget_exhausted, teacher_refused };
const char* to_string(Termination t);

struct AcquisitionEvent {
  int iteration = 0;
  std::string kind;  // evaluated | suggested | accepted | refused | stopped
  std::string detail;
};

struct AcquisitionState {
  std::vector<Demonstration> demos;
  std::size_t initial_count = 0;
  int iteration = 0;
  std::vector<BanditOutcome> history;
  Termination terminated = Termination::none;
  double achieved_beta = 0.0;
  std::vector<AcquisitionEvent> log;
  Rng sampling_rng;
  Rng teacher_rng;

  bool done() const { return terminated != Termination::none; }
};

/// The failure with the smallest failed segment; ties go to the smallest sample index.
/// Throws std::invalid_argument on an empty list.
TaskInstance select_failed_task(std::span<const Failure> failures);

/// Coverage oracle of the configured world for a demonstration set.
CoverageOracle world_oracle(const WorldConfig& w, std::vector<Demonstration> demos);
/// The simulated teacher matching the world (template demonstrator or anchor-only).
std::unique_ptr<Teacher> make_simulated_teacher(const AcquisitionConfig& cfg);
/// D_0 from cfg.initial_anchors via the simulated teacher. Throws if any is refused.
std::vector<Demonstration> initial_demonstrations(const AcquisitionConfig& cfg);
/// Builds a demonstration from object-frame waypoints the way a human answer is
/// recorded: the joint trajectory is tracked on the world's arm. nullopt when the
/// arm cannot execute it.
std::optional<Demonstration> demonstration_from_waypoints(const AcquisitionConfig& cfg, const std::string& id,
                                                          const TaskInstance& anchor, std::vector<Pose> waypoints);

// Drives the acquisition loop one iteration at a time. The teacher is borrowed.
class AcquisitionSession {
 public:
  AcquisitionSession(AcquisitionConfig cfg, std::vector<Demonstration> initial, Teacher& teacher);
  /// Continues from a checkpointed state.
  AcquisitionSession(AcquisitionConfig cfg, AcquisitionState resumed, Teacher& teacher);

  /// One iteration: bandit round, then stop or ask the teacher.
  void step();
  /// Steps until termination.
  const AcquisitionState& run();

  bool done() const { return state_.done(); }
  const AcquisitionState& state() const { return state_; }
  const AcquisitionConfig& config() const { return cfg_; }
  const WorkArea& work_area() const { return wa_; }

  /// Written atomically after every iteration when set.
  void set_checkpoint(std::filesystem::path p) { checkpoint_ = std::move(p); }
  /// Called between the bandit round and the teacher request.
  void on_suggestion(std::function<void(const Suggestion&, const BanditOutcome&)> f) { on_suggestion_ = std::move(f); }

 private:
  void finish(Termination t, double beta, const std::string& why);

  AcquisitionConfig cfg_;
  WorkArea wa_;
  AcquisitionState state_;
  Teacher& teacher_;
  std::optional<std::filesystem::path> checkpoint_;
  std::function<void(const Suggestion&, const BanditOutcome&)> on_suggestion_;
};

/// Alg. 1 with the configured simulated teacher and D_0.
AcquisitionState run_acquisition(const AcquisitionConfig& cfg, std::vector<Demonstration> initial);
AcquisitionState run_acquisition(const AcquisitionConfig& cfg);

void to_json(nlohmann::json& j, const WorldConfig& w);
void from_json(const nlohmann::json& j, WorldConfig& w);
void to_json(nlohmann::json& j, const TeacherConfig& t);
void from_json(const nlohmann::json& j, TeacherConfig& t);
void to_json(nlohmann::json& j, const AcquisitionConfig& c);
void from_json(const nlohmann::json& j, AcquisitionConfig& c);
/// An anchor written as a task instance, a single pose, or a bare [x, y(, z)]
/// position (missing coordinates and the orientation come from the work area).
TaskInstance anchor_from_json(const nlohmann::json& a, const Region& area);
AcquisitionConfig load_config(const std::filesystem::path& file);

/// Full state JSON; bandit samples only when `record_samples`.
nlohmann::json state_to_json(const AcquisitionState& s, bool record_samples);
AcquisitionState state_from_json(const nlohmann::json& j);
/// Checkpoint = {"config": ..., "state": ...}, written via a temp file and rename.
void write_checkpoint(const std::filesystem::path& p, const AcquisitionConfig& cfg, const AcquisitionState& s);
std::pair<AcquisitionConfig, AcquisitionState> read_checkpoint(const std::filesystem::path& p);

}  // namespace demosuff
