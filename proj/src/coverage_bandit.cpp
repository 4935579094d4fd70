#include "demosuff/coverage_bandit.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace demosuff {

namespace {

// Runs f(i) for i in [0, n), splitting contiguous index blocks across threads.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const std::size_t t = std::clamp<std::size_t>(threads > 0 ? threads : 1, 1, std::max<std::size_t>(n, 1));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t k = 0; k < t; ++k) {
    pool.emplace_back([&, k] {
      const std::size_t lo = n * k / t, hi = n * (k + 1) / t;
      for (std::size_t i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<int> active_dims(const Region& r) {
  std::vector<int> dims;
  for (int i = 0; i < 3; ++i) {
    if (r.pos_max[i] > r.pos_min[i]) dims.push_back(i);
  }
  return dims;
}

}  // namespace

// ---------------------------------------------------------------------------
// Work area

WorkArea WorkArea::grid(const Region& region, int K) {
  region.validate();
  if (K < 1) throw std::invalid_argument("K must be positive");
  WorkArea wa;
  wa.region = region;
  std::vector<int> dims = active_dims(region);
  const Eigen::Vector3d ext = region.extent();
  std::stable_sort(dims.begin(), dims.end(), [&](int a, int b) { return ext[a] > ext[b]; });

  int small = 1;
  for (int f = 1; f * f <= K; ++f) {
    if (K % f == 0) small = f;
  }
  wa.dim_a = dims[0];
  wa.cells_a = K / small;
  if (dims.size() > 1) {
    wa.dim_b = dims[1];
    wa.cells_b = small;
  } else {
    wa.dim_b = (wa.dim_a + 1) % 3;
    wa.cells_a = K;
    wa.cells_b = 1;
  }

  const double wa_step = ext[wa.dim_a] / wa.cells_a;
  const double wb_step = ext[wa.dim_b] / wa.cells_b;
  for (int b = 0; b < wa.cells_b; ++b) {
    for (int a = 0; a < wa.cells_a; ++a) {
      Region cell = region;
      cell.pos_min[wa.dim_a] = region.pos_min[wa.dim_a] + a * wa_step;
      cell.pos_max[wa.dim_a] = a + 1 == wa.cells_a ? region.pos_max[wa.dim_a] : region.pos_min[wa.dim_a] + (a + 1) * wa_step;
      if (wa.cells_b > 1) {
        cell.pos_min[wa.dim_b] = region.pos_min[wa.dim_b] + b * wb_step;
        cell.pos_max[wa.dim_b] =
            b + 1 == wa.cells_b ? region.pos_max[wa.dim_b] : region.pos_min[wa.dim_b] + (b + 1) * wb_step;
      }
      wa.partition.push_back(cell);
    }
  }
  return wa;
}

int WorkArea::locate(const Eigen::Vector3d& p) const {
  if (!region.contains(p, 1e-12)) return -1;
  auto cell = [&](int dim, int cells) {
    const double ext = region.pos_max[dim] - region.pos_min[dim];
    if (cells == 1 || ext <= 0.0) return 0;
    const int c = static_cast<int>(std::floor((p[dim] - region.pos_min[dim]) / ext * cells));
    return std::clamp(c, 0, cells - 1);
  };
  return cell(dim_b, cells_b) * cells_a + cell(dim_a, cells_a);
}

// ---------------------------------------------------------------------------
// Oracles

CoverageOracle planning_oracle(std::vector<Demonstration> demos, ManipulatorModel model, PlannerSettings settings) {
  if (demos.empty()) throw std::invalid_argument("coverage needs at least one demonstration");
  auto d = std::make_shared<const std::vector<Demonstration>>(std::move(demos));
  auto m = std::make_shared<const ManipulatorModel>(std::move(model));
  auto s = std::make_shared<const PlannerSettings>(std::move(settings));
  return [d, m, s](const TaskInstance& x) {
    const CoverageCheck c = covered(x, *d, *m, *s);
    return Verdict{c.covered, c.covered ? 0 : c.attempt.track.failed_segment_index.value_or(0)};
  };
}

CoverageOracle anchor_ball_oracle(std::vector<Demonstration> demos, double radius) {
  if (demos.empty()) throw std::invalid_argument("coverage needs at least one demonstration");
  std::vector<Eigen::Vector3d> anchors;
  for (const auto& d : demos) anchors.push_back(d.anchor().primary().translation());
  return [anchors = std::move(anchors), radius](const TaskInstance& x) {
    const Eigen::Vector3d p = x.primary().translation();
    for (const auto& a : anchors) {
      if ((p - a).norm() <= radius) return Verdict{true, 0};
    }
    return Verdict{false, 0};
  };
}

// ---------------------------------------------------------------------------
// Bandit

std::int64_t per_arm_sample_count(double epsilon, double delta, int K) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  if (K < 1) throw std::invalid_argument("K must be positive");
  return static_cast<std::int64_t>(std::ceil(2.0 / (epsilon * epsilon) * std::log(2.0 * K / delta)));
}

BanditOutcome get_best_arm(const WorkArea& wa, const CoverageOracle& oracle, double epsilon, double delta, Rng& rng,
                           const BanditOptions& opts) {
  if (wa.partition.empty()) throw std::invalid_argument("work area has no partition");
  BanditOutcome out;
  out.epsilon = epsilon;
  out.delta = delta;
  out.per_arm_samples = per_arm_sample_count(epsilon, delta, wa.K());
  const auto n = static_cast<std::size_t>(out.per_arm_samples);

  std::vector<TaskInstance> all;
  all.reserve(n * wa.partition.size());
  for (const Region& cell : wa.partition) {
    for (std::size_t i = 0; i < n; ++i) all.emplace_back(sample_region(cell, rng));
  }
  std::vector<Verdict> verdicts(all.size());
  parallel_for(all.size(), opts.threads, [&](std::size_t i) { verdicts[i] = oracle(all[i]); });

  out.estimates.resize(wa.partition.size());
  for (std::size_t j = 0; j < wa.partition.size(); ++j) {
    ArmEstimate& e = out.estimates[j];
    e.arm = static_cast<int>(j);
    e.samples.assign(std::make_move_iterator(all.begin() + j * n), std::make_move_iterator(all.begin() + (j + 1) * n));
    for (std::size_t i = 0; i < n; ++i) {
      const Verdict& v = verdicts[j * n + i];
      if (!v.covered) e.failures.push_back({e.samples[i], v.failed_segment, i});
    }
    e.sample_count = n;
    e.mu_hat = static_cast<double>(e.failures.size()) / static_cast<double>(n);
    if (j == 0 || e.mu_hat > out.best_mu_hat) {
      out.best_arm = static_cast<int>(j);
      out.best_mu_hat = e.mu_hat;
    }
  }
  return out;
}

BanditOutcome get_best_arm(const WorkArea& wa, std::span<const Demonstration> demos, const ManipulatorModel& m,
                           const PlannerSettings& s, double epsilon, double delta, Rng& rng, const BanditOptions& opts) {
  return get_best_arm(wa, planning_oracle({demos.begin(), demos.end()}, m, s), epsilon, delta, rng, opts);
}

// ---------------------------------------------------------------------------
// Brute force

std::vector<TaskInstance> coverage_grid(const Region& region, double resolution) {
  region.validate();
  if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
  if (region.orientation != OrientationSet::fixed)
    throw std::invalid_argument("brute-force coverage supports fixed-orientation regions only");
  const Eigen::Vector3d ext = region.extent();
  std::array<int, 3> cells{1, 1, 1};
  std::size_t total = 1;
  for (int i = 0; i < 3; ++i) {
    if (ext[i] > 0.0) cells[i] = std::max(1, static_cast<int>(std::ceil(ext[i] / resolution - 1e-9)));
    total *= static_cast<std::size_t>(cells[i]);
  }
  if (total < 100) throw std::invalid_argument("grid resolution yields fewer than 100 points");
  std::vector<TaskInstance> out;
  out.reserve(total);
  for (int k = 0; k < cells[2]; ++k) {
    for (int j = 0; j < cells[1]; ++j) {
      for (int i = 0; i < cells[0]; ++i) {
        Eigen::Vector3d p;
        const std::array<int, 3> idx{i, j, k};
        for (int d = 0; d < 3; ++d)
          p[d] = ext[d] > 0.0 ? region.pos_min[d] + (idx[d] + 0.5) * ext[d] / cells[d] : region.pos_min[d];
        out.emplace_back(Pose(region.fixed_q, p));
      }
    }
  }
  return out;
}

namespace {

std::vector<char> evaluate_grid(const std::vector<TaskInstance>& grid, const CoverageOracle& oracle, int threads) {
  std::vector<char> ok(grid.size(), 0);
  parallel_for(grid.size(), threads, [&](std::size_t i) { ok[i] = oracle(grid[i]).covered ? 1 : 0; });
  return ok;
}

}  // namespace

double brute_force_coverage(const Region& region, const CoverageOracle& oracle, double resolution,
                            const BanditOptions& opts) {
  const auto grid = coverage_grid(region, resolution);
  const auto ok = evaluate_grid(grid, oracle, opts.threads);
  return static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(grid.size());
}

double brute_force_coverage(const Region& region, std::span<const Demonstration> demos, const ManipulatorModel& m,
                            const PlannerSettings& s, double resolution, const BanditOptions& opts) {
  return brute_force_coverage(region, planning_oracle({demos.begin(), demos.end()}, m, s), resolution, opts);
}

std::vector<PartitionCoverage> brute_force_partition_coverage(const WorkArea& wa, const CoverageOracle& oracle,
                                                              double resolution, const BanditOptions& opts) {
  const auto grid = coverage_grid(wa.region, resolution);
  const auto ok = evaluate_grid(grid, oracle, opts.threads);
  std::vector<PartitionCoverage> out(wa.partition.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j].arm = static_cast<int>(j);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int j = wa.locate(grid[i].primary().translation());
    if (j < 0) continue;
    ++out[j].points;
    out[j].covered += ok[i];
  }
  return out;
}

bool stopping_satisfied(double best_mu_hat, double epsilon, double beta) { return best_mu_hat <= 1.0 - epsilon - beta; }

double early_stop_beta(double best_mu_hat, double epsilon) { return std::max(0.0, 1.0 - epsilon - best_mu_hat); }

// ---------------------------------------------------------------------------
// Export

std::string heatmap_csv(const WorkArea& wa, const BanditOutcome& outcome) {
  std::ostringstream os;
  os.precision(17);
  os << "arm_index,x_min,x_max,y_min,y_max,mu_hat,n_samples,n_failures\n";
  for (const ArmEstimate& e : outcome.estimates) {
    const Region& r = wa.partition.at(e.arm);
    os << e.arm << ',' << r.pos_min.x() << ',' << r.pos_max.x() << ',' << r.pos_min.y() << ',' << r.pos_max.y() << ','
       << e.mu_hat << ',' << e.n_samples() << ',' << e.n_failures() << '\n';
  }
  return os.str();
}

nlohmann::json heatmap_json(const WorkArea& wa, const BanditOutcome& outcome) {
  auto arms = nlohmann::json::array();
  for (const ArmEstimate& e : outcome.estimates) {
    const Region& r = wa.partition.at(e.arm);
    std::vector<char> failed(e.samples.size(), 0);
    for (const Failure& f : e.failures) {
      if (f.sample_index < failed.size()) failed[f.sample_index] = 1;
    }
    auto dots = nlohmann::json::array();
    for (std::size_t i = 0; i < e.samples.size(); ++i) {
      const Eigen::Vector3d p = e.samples[i].primary().translation();
      dots.push_back({p.x(), p.y(), failed[i] ? 0 : 1});
    }
    auto fails = nlohmann::json::array();
    for (const Failure& f : e.failures) {
      const Eigen::Vector3d p = f.instance.primary().translation();
      fails.push_back({p.x(), p.y(), f.failed_segment});
    }
    arms.push_back({{"arm_index", e.arm},
                    {"x_min", r.pos_min.x()},
                    {"x_max", r.pos_max.x()},
                    {"y_min", r.pos_min.y()},
                    {"y_max", r.pos_max.y()},
                    {"mu_hat", e.mu_hat},
                    {"n_samples", e.n_samples()},
                    {"n_failures", e.n_failures()},
                    {"samples", dots},
                    {"failures", fails}});
  }
  return {{"best_arm", outcome.best_arm}, {"best_mu_hat", outcome.best_mu_hat}, {"arms", arms}};
}

void to_json(nlohmann::json& j, const WorkArea& wa) {
  j = nlohmann::json{{"region", wa.region}, {"K", wa.K()}, {"partition", wa.partition}};
}

namespace {

nlohmann::json outcome_json(const BanditOutcome& o, bool with_samples) {
  auto arms = nlohmann::json::array();
  for (const ArmEstimate& e : o.estimates) {
    auto fails = nlohmann::json::array();
    for (const Failure& f : e.failures)
      fails.push_back({{"instance", f.instance}, {"failed_segment", f.failed_segment}, {"sample_index", f.sample_index}});
    nlohmann::json a{{"arm", e.arm}, {"mu_hat", e.mu_hat}, {"n_samples", e.n_samples()}, {"failures", fails}};
    if (with_samples) a["samples"] = e.samples;
    arms.push_back(std::move(a));
  }
  return {{"best_arm", o.best_arm},
          {"best_mu_hat", o.best_mu_hat},
          {"per_arm_samples", o.per_arm_samples},
          {"epsilon", o.epsilon},
          {"delta", o.delta},
          {"estimates", arms}};
}

}  // namespace

void to_json(nlohmann::json& j, const BanditOutcome& o) { j = outcome_json(o, true); }

nlohmann::json summary_json(const BanditOutcome& o) { return outcome_json(o, false); }

BanditOutcome bandit_outcome_from_json(const nlohmann::json& j) {
  BanditOutcome o;
  o.best_arm = j.at("best_arm").get<int>();
  o.best_mu_hat = j.at("best_mu_hat").get<double>();
  o.per_arm_samples = j.at("per_arm_samples").get<std::int64_t>();
  o.epsilon = j.at("epsilon").get<double>();
  o.delta = j.at("delta").get<double>();
  for (const auto& a : j.at("estimates")) {
    ArmEstimate e;
    e.arm = a.at("arm").get<int>();
    e.mu_hat = a.at("mu_hat").get<double>();
    e.sample_count = a.at("n_samples").get<std::size_t>();
    if (a.contains("samples")) e.samples = a.at("samples").get<std::vector<TaskInstance>>();
    for (const auto& f : a.at("failures"))
      e.failures.push_back({f.at("instance").get<TaskInstance>(), f.at("failed_segment").get<int>(),
                            f.at("sample_index").get<std::size_t>()});
    o.estimates.push_back(std::move(e));
  }
  return o;
}

}  // namespace demosuff
