#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "demosuff/experiments.hpp"
#include "demosuff/service.hpp"

namespace fs = std::filesystem;
using namespace demosuff;
using nlohmann::json;

namespace {

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

void warn(const AcquisitionConfig& c) {
  for (const auto& w : c.warnings()) std::cerr << "warning: " << w << '\n';
}

int acquire(const std::string& config, const std::string& resume, const fs::path& out, bool paper) {
  const fs::path ckpt = out / "checkpoint.json";
  std::optional<AcquisitionState> state;
  AcquisitionConfig cfg;
  if (!resume.empty()) {
    auto [c, s] = read_checkpoint(resume);
    cfg = std::move(c);
    state = std::move(s);
  } else {
    cfg = load_config(config);
    if (paper) apply_paper_parameters(cfg);
  }
  if (cfg.teacher.kind != TeacherConfig::Kind::simulated) {
    std::cerr << "error: interactive configs run under `serve`\n";
    return 2;
  }
  ExperimentSpec spec{ExperimentSpec::Command::acquire, cfg, out, 1};
  spec.validate();
  warn(cfg);
  const auto teacher = make_simulated_teacher(cfg);
  std::unique_ptr<AcquisitionSession> session =
      state ? std::make_unique<AcquisitionSession>(cfg, std::move(*state), *teacher)
            : std::make_unique<AcquisitionSession>(cfg, initial_demonstrations(cfg), *teacher);
  session->set_checkpoint(ckpt);
  while (!session->done()) {
    session->step();
    const auto& s = session->state();
    const auto& o = s.history.back();
    std::cout << "iteration " << s.iteration << ": best arm " << o.best_arm << " mu_hat " << o.best_mu_hat
              << ", demos " << s.demos.size() << '\n';
  }
  const AcquisitionState& s = session->state();
  write_file(out / "state.json", state_to_json(s, cfg.record_samples).dump(1) + "\n");
  write_file(out / "heatmap.csv", heatmap_csv(session->work_area(), s.history.back()));
  std::cout << "terminated " << to_string(s.terminated) << " with " << s.demos.size() << " demonstrations, beta "
            << s.achieved_beta << '\n';
  return 0;
}

int k_sweep(const std::string& config, const std::string& Ks, int reps, int threads, const fs::path& out) {
  AcquisitionConfig cfg = load_config(config);
  std::vector<int> list;
  for (double k : parse_list(Ks)) list.push_back(static_cast<int>(k));
  ExperimentSpec spec{ExperimentSpec::Command::k_sweep, cfg, out, reps};
  spec.validate();
  warn(cfg);
  const KSweepResult r = run_k_sweep(cfg, list, reps, threads);
  write_file(out / "k_sweep_runs.csv", r.rows_csv());
  write_file(out / "k_sweep_pmf.csv", r.pmf_csv());
  const json summary = r.summary();
  write_file(out / "k_sweep_summary.json", summary.dump(2) + "\n");
  for (const auto& s : r.summary())
    std::cout << "K=" << s.K << " runs=" << s.runs << " mean=" << s.mean << " max=" << s.max
              << " sufficient=" << s.sufficient << '\n';
  return 0;
}

int mask_study(const std::string& scenario, const fs::path& out) {
  ExperimentSpec spec{ExperimentSpec::Command::mask_study, {}, out, 1};
  spec.validate();
  const MaskStudyReport r = run_mask_study(scenario);
  write_file(out / "mask_study.json", json(r).dump(2) + "\n");
  std::cout << "K=1 acquisition: " << to_string(r.acquisition.terminated) << " after " << r.acquisition.iteration
            << " iteration(s), " << r.acquisition.demos.size() << " demonstrations\n";
  for (const auto& p : r.partitions)
    std::cout << "arm " << p.arm << " coverage " << p.coverage() << (p.coverage() < r.beta ? "  FLAGGED" : "") << '\n';
  std::cout << "overall coverage " << r.overall_coverage << ", volume-weighted " << r.weighted_coverage << ", "
            << r.flagged.size() << " partition(s) below beta " << r.beta << '\n';
  return 0;
}

int heatmap(const std::string& state_file, const fs::path& out, const std::string& json_out) {
  auto [cfg, s] = read_checkpoint(state_file);
  if (s.history.empty()) {
    std::cerr << "error: the checkpoint has no bandit round yet\n";
    return 2;
  }
  const WorkArea wa = WorkArea::grid(cfg.work_area, cfg.K);
  write_file(out, heatmap_csv(wa, s.history.back()));
  if (!json_out.empty()) write_file(json_out, heatmap_json(wa, s.history.back()).dump() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path data = DEMOSUFF_DATA_DIR;
  CLI::App app{"Demonstration sufficiency: PAC self-evaluation and incremental demonstration acquisition"};
  app.require_subcommand(1);

  std::string config, resume, scenario, state_file, Ks = "1,4,16", arms = "0.9,0.5,0.1", json_out, host = "127.0.0.1";
  fs::path out = "out";
  fs::path heat_out = "heatmap.csv";
  int reps = 100, threads = 1, port = 8080, runs = 200;
  double eps = 0.1, delta = 0.1;
  std::uint64_t seed = 1;
  bool paper = false, manual = false;

  auto* acq = app.add_subcommand("acquire", "Run the acquisition loop with the simulated teacher");
  acq->add_option("--config", config, "Acquisition config JSON");
  acq->add_option("--resume", resume, "Continue from a checkpoint");
  acq->add_option("--out", out, "Output directory")->capture_default_str();
  acq->add_flag("--paper-params", paper, "Use epsilon=0.02, delta=0.05, beta=0.95, K=16");

  auto* sweep = app.add_subcommand("k-sweep", "Demonstration count distribution for several partition counts");
  sweep->add_option("--config", config, "Scenario config JSON")->default_str((data / "scenarios" / "k_sweep.json").string());
  sweep->add_option("--K", Ks, "Comma-separated partition counts")->capture_default_str();
  sweep->add_option("--reps", reps, "Runs per K")->capture_default_str();
  sweep->add_option("--threads", threads, "Worker threads")->capture_default_str();
  sweep->add_option("--out", out, "Output directory")->capture_default_str();

  auto* bv = app.add_subcommand("bandit-validate", "Check get_best_arm against Bernoulli arms with known means");
  bv->add_option("--eps", eps)->capture_default_str();
  bv->add_option("--delta", delta)->capture_default_str();
  bv->add_option("--arms", arms, "Comma-separated arm means")->capture_default_str();
  bv->add_option("--runs", runs)->capture_default_str();
  bv->add_option("--seed", seed)->capture_default_str();

  auto* mask = app.add_subcommand("mask-study", "K=1 acquisition re-evaluated per partition");
  mask->add_option("--scenario", scenario, "Scenario JSON")
      ->default_str((data / "scenarios" / "weak_corner.json").string());
  mask->add_option("--out", out, "Output directory")->capture_default_str();

  auto* hm = app.add_subcommand("heatmap", "Export the latest estimates of a checkpoint");
  hm->add_option("--state", state_file, "Checkpoint file")->required();
  hm->add_option("--out", heat_out, "CSV output")->capture_default_str();
  hm->add_option("--json", json_out, "Also write the JSON heatmap here");

  auto* srv = app.add_subcommand("serve", "HTTP/JSON service for the interactive teacher");
  srv->add_option("--port", port)->capture_default_str();
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--config", config, "Start a session with this config right away");
  srv->add_flag("--manual", manual, "Advance only on POST /api/step");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*acq) {
      if (config.empty() && resume.empty()) throw CLI::RequiredError("--config or --resume");
      return acquire(config, resume, out, paper);
    }
    if (*sweep) {
      if (config.empty()) config = (data / "scenarios" / "k_sweep.json").string();
      return k_sweep(config, Ks, reps, threads, out);
    }
    if (*bv) {
      const BanditValidation v = validate_bandit(parse_list(arms), eps, delta, runs, seed);
      std::cout << json(v).dump(2) << '\n';
      return v.accuracy_ok() && v.optimality_ok() ? 0 : 1;
    }
    if (*mask) {
      if (scenario.empty()) scenario = (data / "scenarios" / "weak_corner.json").string();
      return mask_study(scenario, out);
    }
    if (*hm) return heatmap(state_file, heat_out, json_out);
    if (*srv) {
      std::optional<json> start;
      if (!config.empty()) start = json{{"config", config}, {"manual", manual}};
      std::cout << "serving on http://" << host << ':' << port << '\n' << std::flush;
      serve(host, port, start);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
