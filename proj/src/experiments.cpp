#include "demosuff/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace demosuff {

void ExperimentSpec::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  const auto probe = output_dir / ".demosuff_write_probe";
  std::ofstream out(probe);
  if (!out) throw std::invalid_argument("output directory is not writable: " + output_dir.string());
  out.close();
  std::filesystem::remove(probe, ec);
}

void apply_paper_parameters(AcquisitionConfig& c) {
  c.epsilon = 0.02;
  c.delta = 0.05;
  c.beta = 0.95;
  c.K = 16;
}

// ---------------------------------------------------------------------------
// K sweep

std::uint64_t sweep_seed(std::uint64_t base, int K, int r) {
  return base * 1000003ULL + static_cast<std::uint64_t>(K) * 100000ULL + static_cast<std::uint64_t>(r);
}

KSweepResult run_k_sweep(const AcquisitionConfig& base, const std::vector<int>& Ks, int reps, int threads) {
  if (base.teacher.kind != TeacherConfig::Kind::simulated)
    throw std::invalid_argument("k-sweep needs a simulated teacher");
  if (reps < 1) throw std::invalid_argument("repetitions must be at least 1");
  if (Ks.empty()) throw std::invalid_argument("k-sweep needs at least one K");
  base.validate();
  const std::vector<Demonstration> initial = initial_demonstrations(base);

  KSweepResult out;
  for (int K : Ks) {
    for (int r = 0; r < reps; ++r) out.rows.push_back({K, r, sweep_seed(base.seed, K, r)});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < out.rows.size(); i = next++) {
      KSweepRow& row = out.rows[i];
      AcquisitionConfig c = base;
      c.K = row.K;
      c.seed = row.seed;
      c.threads = 1;
      const AcquisitionState s = run_acquisition(c, initial);
      row.demo_count = s.demos.size();
      row.terminated = s.terminated;
      row.achieved_beta = s.achieved_beta;
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(out.rows.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return out;
}

std::vector<KSweepSummary> KSweepResult::summary() const {
  std::vector<KSweepSummary> out;
  for (const KSweepRow& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const KSweepSummary& s) { return s.K == row.K; });
    if (it == out.end()) {
      out.push_back({row.K});
      it = out.end() - 1;
    }
    ++it->runs;
    it->mean += static_cast<double>(row.demo_count);
    it->max = std::max(it->max, row.demo_count);
    it->sufficient += row.terminated == Termination::sufficient;
  }
  for (auto& s : out) s.mean /= s.runs;
  return out;
}

std::string KSweepResult::rows_csv() const {
  std::ostringstream os;
  os << "K,run_index,seed,demo_count,terminated,achieved_beta\n";
  for (const auto& r : rows)
    os << r.K << ',' << r.run_index << ',' << r.seed << ',' << r.demo_count << ',' << to_string(r.terminated) << ','
       << r.achieved_beta << '\n';
  return os.str();
}

std::string KSweepResult::pmf_csv() const {
  std::map<int, std::map<std::size_t, int>> counts;
  std::map<int, int> totals;
  for (const auto& r : rows) {
    ++counts[r.K][r.demo_count];
    ++totals[r.K];
  }
  std::ostringstream os;
  os << "K,demo_count,count,probability\n";
  for (const auto& [K, hist] : counts) {
    for (const auto& [d, c] : hist) os << K << ',' << d << ',' << c << ',' << static_cast<double>(c) / totals[K] << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Mask study

MaskStudyReport run_mask_study(const AcquisitionConfig& cfg, int K_eval, double resolution) {
  if (K_eval < 1) throw std::invalid_argument("K_eval must be positive");
  AcquisitionConfig c = cfg;
  c.K = 1;
  MaskStudyReport r;
  r.acquisition = run_acquisition(c);
  r.beta = c.beta;
  r.resolution = resolution;
  r.eval_area = WorkArea::grid(c.work_area, K_eval);
  const CoverageOracle oracle = world_oracle(c.world, r.acquisition.demos);
  const BanditOptions opts{c.threads};
  r.partitions = brute_force_partition_coverage(r.eval_area, oracle, resolution, opts);
  r.overall_coverage = brute_force_coverage(c.work_area, oracle, resolution, opts);
  const double total = c.work_area.volume();
  for (int j = 0; j < r.eval_area.K(); ++j) {
    const double f = r.eval_area.partition[j].volume() / total;
    r.volume_fractions.push_back(f);
    r.weighted_coverage += f * r.partitions[j].coverage();
    if (r.partitions[j].coverage() < r.beta) r.flagged.push_back(j);
  }
  return r;
}

MaskStudyReport run_mask_study(const std::filesystem::path& scenario) {
  std::ifstream in(scenario);
  if (!in) throw std::invalid_argument("cannot open scenario " + scenario.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  AcquisitionConfig c = j.get<AcquisitionConfig>();
  c.validate();
  const nlohmann::json m = j.value("mask_study", nlohmann::json::object());
  return run_mask_study(c, m.value("K_eval", 16), m.value("resolution", 0.01));
}

// ---------------------------------------------------------------------------
// Bandit validation

BanditValidation validate_bandit(const std::vector<double>& mu, double epsilon, double delta, int runs,
                                 std::uint64_t seed) {
  if (mu.empty()) throw std::invalid_argument("need at least one arm mean");
  for (double m : mu)
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("arm means must lie in [0,1]");
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  const int K = static_cast<int>(mu.size());

  // Arm j is the unit cell [j, j+1] x [0, 1]; an instance fails iff y < μ_j.
  WorkArea wa;
  wa.region = Region({0.0, 0.0, 0.0}, {static_cast<double>(K), 1.0, 0.0});
  for (int j = 0; j < K; ++j) wa.partition.emplace_back(Eigen::Vector3d(double(j), 0.0, 0.0), Eigen::Vector3d(j + 1.0, 1.0, 0.0));
  wa.cells_a = K;
  const CoverageOracle oracle = [&mu, K](const TaskInstance& x) {
    const Eigen::Vector3d p = x.primary().translation();
    const int j = std::clamp(static_cast<int>(std::floor(p.x())), 0, K - 1);
    return Verdict{p.y() >= mu[j], 0};
  };

  BanditValidation v;
  v.mu = mu;
  v.epsilon = epsilon;
  v.delta = delta;
  v.runs = runs;
  v.per_arm_samples = per_arm_sample_count(epsilon, delta, K);
  v.allowed_violations = delta * runs + 3.0 * std::sqrt(delta * (1.0 - delta) * runs);
  const double best = *std::max_element(mu.begin(), mu.end());
  for (int r = 0; r < runs; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r));
    const BanditOutcome o = get_best_arm(wa, oracle, epsilon, delta, rng);
    double err = 0.0;
    for (int j = 0; j < K; ++j) err = std::max(err, std::abs(mu[j] - o.estimates[j].mu_hat));
    const bool accurate = err <= epsilon / 2.0;
    const bool optimal = best - mu[o.best_arm] <= epsilon;
    v.accuracy_violations += !accurate;
    v.optimality_violations += accurate && !optimal;
    v.suboptimal_picks += !optimal;
  }
  return v;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const KSweepSummary& s) {
  j = nlohmann::json{{"K", s.K}, {"runs", s.runs}, {"mean", s.mean}, {"max", s.max}, {"sufficient", s.sufficient}};
}

void to_json(nlohmann::json& j, const MaskStudyReport& r) {
  auto parts = nlohmann::json::array();
  for (std::size_t i = 0; i < r.partitions.size(); ++i) {
    const Region& b = r.eval_area.partition[i];
    parts.push_back({{"arm", r.partitions[i].arm},
                     {"pos_min", {b.pos_min.x(), b.pos_min.y(), b.pos_min.z()}},
                     {"pos_max", {b.pos_max.x(), b.pos_max.y(), b.pos_max.z()}},
                     {"points", r.partitions[i].points},
                     {"covered", r.partitions[i].covered},
                     {"coverage", r.partitions[i].coverage()},
                     {"volume_fraction", r.volume_fractions[i]},
                     {"flagged", r.partitions[i].coverage() < r.beta}});
  }
  const BanditOutcome* last = r.acquisition.history.empty() ? nullptr : &r.acquisition.history.back();
  j = nlohmann::json{{"acquisition",
                      {{"K", 1},
                       {"terminated", to_string(r.acquisition.terminated)},
                       {"iterations", r.acquisition.iteration},
                       {"demos", r.acquisition.demos.size()},
                       {"achieved_beta", r.acquisition.achieved_beta},
                       {"best_mu_hat", last ? last->best_mu_hat : 0.0}}},
                     {"beta", r.beta},
                     {"K_eval", r.eval_area.K()},
                     {"resolution", r.resolution},
                     {"partitions", parts},
                     {"flagged", r.flagged},
                     {"overall_coverage", r.overall_coverage},
                     {"weighted_coverage", r.weighted_coverage}};
}

void to_json(nlohmann::json& j, const BanditValidation& v) {
  j = nlohmann::json{{"mu", v.mu},
                     {"epsilon", v.epsilon},
                     {"delta", v.delta},
                     {"runs", v.runs},
                     {"per_arm_samples", v.per_arm_samples},
                     {"accuracy_violations", v.accuracy_violations},
                     {"allowed_violations", v.allowed_violations},
                     {"optimality_violations", v.optimality_violations},
                     {"suboptimal_picks", v.suboptimal_picks},
                     {"accuracy_ok", v.accuracy_ok()},
                     {"optimality_ok", v.optimality_ok()}};
}

}  // namespace demosuff
