#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "demosuff/acquisition.hpp"

namespace demosuff {

struct ExperimentSpec {
  enum class Command { acquire, heatmap, k_sweep, bandit_validate, mask_study };
  Command command = Command::acquire;
  AcquisitionConfig config;
  std::filesystem::path output_dir = ".";
  int repetitions = 1;

  /// Throws std::invalid_argument for repetitions < 1 or an unwritable output directory.
  void validate() const;
};

/// The ε=0.02, δ=0.05, β=0.95, K=16 setting of the original experiments.
void apply_paper_parameters(AcquisitionConfig& c);

struct KSweepRow {
  int K = 1;
  int run_index = 0;
  std::uint64_t seed = 0;
  std::size_t demo_count = 0;
  Termination terminated = Termination::none;
  double achieved_beta = 0.0;
};

struct KSweepSummary {
  int K = 1;
  int runs = 0;
  double mean = 0.0;
  std::size_t max = 0;
  int sufficient = 0;
};

struct KSweepResult {
  std::vector<KSweepRow> rows;

  std::vector<KSweepSummary> summary() const;
  /// K,run_index,seed,demo_count,terminated,achieved_beta
  std::string rows_csv() const;
  /// K,demo_count,count,probability
  std::string pmf_csv() const;
};

/// Seed of run `r` at partition count K: distinct for every (K, r) pair.
std::uint64_t sweep_seed(std::uint64_t base, int K, int r);

/// run_acquisition `reps` times per K, each with its own seed. Runs are
/// independent, so `threads` workers only change the wall time.
KSweepResult run_k_sweep(const AcquisitionConfig& base, const std::vector<int>& Ks, int reps, int threads = 1);

struct MaskStudyReport {
  AcquisitionState acquisition;  // the K=1 run
  double beta = 0.0;
  double resolution = 0.0;
  WorkArea eval_area;
  std::vector<PartitionCoverage> partitions;
  std::vector<double> volume_fractions;
  std::vector<int> flagged;  // arms with coverage < β
  double overall_coverage = 0.0;
  double weighted_coverage = 0.0;  // Σ Vol_j/Vol · coverage_j
};

/// Acquisition at K=1 to termination, then per-partition brute-force coverage of
/// the final demonstration set on a K_eval grid.
MaskStudyReport run_mask_study(const AcquisitionConfig& cfg, int K_eval = 16, double resolution = 0.01);
/// Reads K_eval and resolution from the scenario's optional "mask_study" object.
MaskStudyReport run_mask_study(const std::filesystem::path& scenario);

struct BanditValidation {
  std::vector<double> mu;
  double epsilon = 0.0;
  double delta = 0.0;
  int runs = 0;
  std::int64_t per_arm_samples = 0;
  int accuracy_violations = 0;      // runs with max_j |μ_j − μ̂_j| > ε/2
  int optimality_violations = 0;    // accurate runs with μ_max − μ_{j*} > ε
  int suboptimal_picks = 0;         // any run with μ_max − μ_{j*} > ε
  double allowed_violations = 0.0;  // δ·runs + 3·sqrt(δ(1−δ)·runs)

  bool accuracy_ok() const { return accuracy_violations <= allowed_violations; }
  bool optimality_ok() const { return optimality_violations == 0; }
};

/// get_best_arm on synthetic Bernoulli arms with known means, `runs` seeded repetitions.
BanditValidation validate_bandit(const std::vector<double>& mu, double epsilon, double delta, int runs,
                                 std::uint64_t seed = 1);

void to_json(nlohmann::json& j, const KSweepSummary& s);
void to_json(nlohmann::json& j, const MaskStudyReport& r);
void to_json(nlohmann::json& j, const BanditValidation& v);

}  // namespace demosuff
