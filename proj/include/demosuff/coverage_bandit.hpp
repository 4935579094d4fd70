#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

#include "demosuff/demonstration.hpp"
#include "demosuff/planner.hpp"
#include "demosuff/region.hpp"

namespace demosuff {

// The full task-instance region X and its partition into K grid cells (the arms).
struct WorkArea {
  Region region;
  std::vector<Region> partition;

  /// Splits the two widest position dimensions into an a×b grid with a·b = K,
  /// a and b as close as possible and the larger count along the longer side.
  /// Arms are numbered row-major from pos_min.
  static WorkArea grid(const Region& region, int K);

  int K() const { return static_cast<int>(partition.size()); }
  /// Index of the arm containing p (boundary points go to the higher cell); -1 if outside.
  int locate(const Eigen::Vector3d& p) const;

  // Grid bookkeeping for locate().
  int dim_a = 0, dim_b = 1;
  int cells_a = 1, cells_b = 1;
};

struct Verdict {
  bool covered = false;
  int failed_segment = 0;  // meaningful only when !covered
};

// Coverage predicate over task instances; must be safe to call concurrently.
using CoverageOracle = std::function<Verdict(const TaskInstance&)>;

CoverageOracle planning_oracle(std::vector<Demonstration> demos, ManipulatorModel model, PlannerSettings settings = {});
/// Covered iff some demonstration anchor lies within `radius` of the instance position.
CoverageOracle anchor_ball_oracle(std::vector<Demonstration> demos, double radius);

struct Failure {
  TaskInstance instance;
  int failed_segment = 0;
  std::size_t sample_index = 0;  // position in ArmEstimate::samples
};

struct ArmEstimate {
  int arm = 0;
  std::vector<TaskInstance> samples;  // may be empty when loaded from a summary
  std::vector<Failure> failures;
  std::size_t sample_count = 0;
  double mu_hat = 0.0;  // failures.size() / sample_count

  std::size_t n_samples() const { return sample_count; }
  std::size_t n_failures() const { return failures.size(); }
};

struct BanditOutcome {
  int best_arm = 0;
  double best_mu_hat = 0.0;
  std::vector<ArmEstimate> estimates;
  std::int64_t per_arm_samples = 0;
  double epsilon = 0.0;
  double delta = 0.0;
};

/// ceil((2/ε²)·ln(2K/δ)). Throws std::invalid_argument outside ε,δ ∈ (0,1), K ≥ 1.
std::int64_t per_arm_sample_count(double epsilon, double delta, int K);

struct BanditOptions {
  int threads = 1;
};

/// Naive (ε,δ)-PAC best-arm identification where reward 1 means "not covered".
/// All samples are drawn from `rng` arm by arm before any evaluation, so the
/// outcome does not depend on the thread count.
BanditOutcome get_best_arm(const WorkArea& wa, const CoverageOracle& oracle, double epsilon, double delta, Rng& rng,
                           const BanditOptions& opts = {});
BanditOutcome get_best_arm(const WorkArea& wa, std::span<const Demonstration> demos, const ManipulatorModel& m,
                           const PlannerSettings& s, double epsilon, double delta, Rng& rng,
                           const BanditOptions& opts = {});

/// Task instances at the centres of a regular grid over the region's
/// non-degenerate position dimensions (ceil(extent/resolution) cells each).
/// Fixed-orientation regions only; throws on fewer than 100 points.
std::vector<TaskInstance> coverage_grid(const Region& region, double resolution);

double brute_force_coverage(const Region& region, const CoverageOracle& oracle, double resolution,
                            const BanditOptions& opts = {});
double brute_force_coverage(const Region& region, std::span<const Demonstration> demos, const ManipulatorModel& m,
                            const PlannerSettings& s, double resolution, const BanditOptions& opts = {});

struct PartitionCoverage {
  int arm = 0;
  std::size_t points = 0;
  std::size_t covered = 0;
  double coverage() const { return points ? static_cast<double>(covered) / points : 0.0; }
};

/// Per-arm coverage on the common grid of the whole work area.
std::vector<PartitionCoverage> brute_force_partition_coverage(const WorkArea& wa, const CoverageOracle& oracle,
                                                              double resolution, const BanditOptions& opts = {});

/// μ̂ ≤ 1 − ε − β.
bool stopping_satisfied(double best_mu_hat, double epsilon, double beta);
/// max(0, 1 − ε − μ̂).
double early_stop_beta(double best_mu_hat, double epsilon);

std::string heatmap_csv(const WorkArea& wa, const BanditOutcome& outcome);
/// Partition bounds, estimates and sample dots (position + covered flag).
nlohmann::json heatmap_json(const WorkArea& wa, const BanditOutcome& outcome);

void to_json(nlohmann::json& j, const WorkArea& wa);
void to_json(nlohmann::json& j, const BanditOutcome& o);
/// Without the per-sample lists (failures are kept).
nlohmann::json summary_json(const BanditOutcome& o);
BanditOutcome bandit_outcome_from_json(const nlohmann::json& j);

}  // namespace demosuff
