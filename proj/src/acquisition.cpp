#include "demosuff/acquisition.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace demosuff {

const ManipulatorModel& WorldConfig::manipulator() const {
  if (!model) throw std::invalid_argument("world has no manipulator model");
  return *model;
}

const DemoTemplate& WorldConfig::task_template() const {
  if (!demo_template) throw std::invalid_argument("world has no demonstration template");
  return *demo_template;
}

void AcquisitionConfig::validate() const {
  auto open01 = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument(std::string(name) + " must be in (0,1)");
  };
  open01(epsilon, "epsilon");
  open01(delta, "delta");
  open01(beta, "beta");
  if (K < 1) throw std::invalid_argument("K must be positive");
  if (max_demonstrations < 1) throw std::invalid_argument("max_demonstrations must be positive");
  if (teacher.placement_noise < 0.0) throw std::invalid_argument("placement_noise must be non-negative");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
  work_area.validate();
  if (world.kind == WorldConfig::Kind::planning) {
    world.manipulator();
    world.task_template();
  } else if (!(world.radius > 0.0)) {
    throw std::invalid_argument("ball world radius must be positive");
  }
  for (const TaskInstance& x : initial_anchors) {
    if (!work_area.contains(x.primary().translation(), 1e-12))
      throw std::invalid_argument("initial anchor lies outside the work area");
  }
}

std::vector<std::string> AcquisitionConfig::warnings() const {
  std::vector<std::string> w;
  if (1.0 - epsilon - beta <= 0.0) {
    std::ostringstream os;
    os << "stopping threshold 1 - epsilon - beta = " << 1.0 - epsilon - beta
       << " is not positive; the loop stops only if no sample fails";
    w.push_back(os.str());
  }
  if (initial_anchors.empty()) w.push_back("no initial anchors configured; D_0 must be supplied separately");
  return w;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::sufficient: return "sufficient";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::teacher_refused: return "teacher_refused";
  }
  return "unknown";
}

namespace {

Termination termination_from_string(const std::string& s) {
  for (Termination t : {Termination::none, Termination::sufficient, Termination::budget_exhausted,
                        Termination::teacher_refused}) {
    if (s == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown termination: " + s);
}

std::uint64_t teacher_seed(std::uint64_t seed) { return seed * 6364136223846793005ULL + 1442695040888963407ULL; }

std::string demo_id(std::size_t index) { return "demo-" + std::to_string(index); }

}  // namespace

TaskInstance select_failed_task(std::span<const Failure> failures) {
  if (failures.empty()) throw std::invalid_argument("no failed task instances to choose from");
  const auto it = std::min_element(failures.begin(), failures.end(), [](const Failure& a, const Failure& b) {
    return a.failed_segment != b.failed_segment ? a.failed_segment < b.failed_segment : a.sample_index < b.sample_index;
  });
  return it->instance;
}

CoverageOracle world_oracle(const WorldConfig& w, std::vector<Demonstration> demos) {
  if (w.kind == WorldConfig::Kind::ball) return anchor_ball_oracle(std::move(demos), w.radius);
  return planning_oracle(std::move(demos), w.manipulator(), w.planner);
}

std::unique_ptr<Teacher> make_simulated_teacher(const AcquisitionConfig& cfg) {
  if (cfg.world.kind == WorldConfig::Kind::ball)
    return std::make_unique<AnchorTeacher>(cfg.work_area, cfg.teacher.placement_noise);
  return std::make_unique<SimulatedTeacher>(cfg.world.task_template(), cfg.world.manipulator(), cfg.world.planner,
                                            cfg.work_area, cfg.teacher.placement_noise);
}

std::vector<Demonstration> initial_demonstrations(const AcquisitionConfig& cfg) {
  std::vector<Demonstration> out;
  for (const TaskInstance& x : cfg.initial_anchors) {
    const std::string id = demo_id(out.size());
    if (cfg.world.kind == WorldConfig::Kind::ball) {
      out.push_back(AnchorTeacher::at(x, id));
      continue;
    }
    SimulatedTeacher t(cfg.world.task_template(), cfg.world.manipulator(), cfg.world.planner, cfg.work_area, 0.0);
    auto d = t.demonstrate_at(x, id);
    if (!d) throw std::invalid_argument("initial demonstration cannot be executed at its anchor");
    out.push_back(std::move(*d));
  }
  return out;
}

std::optional<Demonstration> demonstration_from_waypoints(const AcquisitionConfig& cfg, const std::string& id,
                                                          const TaskInstance& anchor, std::vector<Pose> waypoints) {
  if (cfg.world.kind == WorldConfig::Kind::ball) return Demonstration::from_object_frame(id, anchor, std::move(waypoints));
  std::vector<Pose> guides;
  for (const Pose& w : waypoints) guides.push_back(anchor.primary() * w);
  TrackResult track = plan_through_guides(cfg.world.manipulator(), guides, cfg.world.planner);
  if (!track.ok()) return std::nullopt;
  return Demonstration::from_object_frame(id, anchor, std::move(waypoints), std::move(track.joint_path));
}

// ---------------------------------------------------------------------------
// Session

AcquisitionSession::AcquisitionSession(AcquisitionConfig cfg, std::vector<Demonstration> initial, Teacher& teacher)
    : cfg_(std::move(cfg)), wa_(WorkArea::grid(cfg_.work_area, cfg_.K)), teacher_(teacher) {
  cfg_.validate();
  if (initial.empty()) throw std::invalid_argument("acquisition needs at least one initial demonstration");
  state_.demos = std::move(initial);
  state_.initial_count = state_.demos.size();
  state_.sampling_rng = Rng(cfg_.seed);
  state_.teacher_rng = Rng(teacher_seed(cfg_.seed));
}

AcquisitionSession::AcquisitionSession(AcquisitionConfig cfg, AcquisitionState resumed, Teacher& teacher)
    : cfg_(std::move(cfg)), wa_(WorkArea::grid(cfg_.work_area, cfg_.K)), state_(std::move(resumed)), teacher_(teacher) {
  cfg_.validate();
  if (state_.demos.empty()) throw std::invalid_argument("resumed state has no demonstrations");
}

void AcquisitionSession::finish(Termination t, double beta, const std::string& why) {
  state_.terminated = t;
  state_.achieved_beta = beta;
  state_.log.push_back({state_.iteration, "stopped", std::string(to_string(t)) + ": " + why});
}

void AcquisitionSession::step() {
  if (done()) return;
  ++state_.iteration;
  BanditOutcome outcome = get_best_arm(wa_, world_oracle(cfg_.world, state_.demos), cfg_.epsilon, cfg_.delta,
                                       state_.sampling_rng, {cfg_.threads});
  {
    std::ostringstream os;
    os << "best arm " << outcome.best_arm << ", mu_hat " << outcome.best_mu_hat;
    state_.log.push_back({state_.iteration, "evaluated", os.str()});
  }
  const double mu = outcome.best_mu_hat;
  const int arm = outcome.best_arm;
  const std::vector<Failure> failures = outcome.estimates[arm].failures;
  state_.history.push_back(std::move(outcome));

  if (stopping_satisfied(mu, cfg_.epsilon, cfg_.beta)) {
    finish(Termination::sufficient, cfg_.beta, "stopping condition met");
  } else if (state_.demos.size() >= static_cast<std::size_t>(cfg_.max_demonstrations)) {
    finish(Termination::budget_exhausted, early_stop_beta(mu, cfg_.epsilon), "demonstration budget used up");
  } else {
    Suggestion s{select_failed_task(failures), wa_.partition[arm], arm, state_.iteration,
                 demo_id(state_.demos.size())};
    {
      const Eigen::Vector3d p = s.instance.primary().translation();
      std::ostringstream os;
      os << "arm " << arm << " at (" << p.x() << ", " << p.y() << ", " << p.z() << ")";
      state_.log.push_back({state_.iteration, "suggested", os.str()});
    }
    if (on_suggestion_) on_suggestion_(s, state_.history.back());
    std::optional<Demonstration> d = teacher_.request(s, state_.teacher_rng);
    if (!d) {
      state_.log.push_back({state_.iteration, "refused", s.demo_id});
      finish(Termination::teacher_refused, early_stop_beta(mu, cfg_.epsilon), "teacher declined the suggestion");
    } else {
      state_.log.push_back({state_.iteration, "accepted", d->id()});
      state_.demos.push_back(std::move(*d));
    }
  }
  if (checkpoint_) write_checkpoint(*checkpoint_, cfg_, state_);
}

const AcquisitionState& AcquisitionSession::run() {
  while (!done()) step();
  return state_;
}

AcquisitionState run_acquisition(const AcquisitionConfig& cfg, std::vector<Demonstration> initial) {
  if (cfg.teacher.kind != TeacherConfig::Kind::simulated)
    throw std::invalid_argument("batch acquisition needs a simulated teacher");
  const auto teacher = make_simulated_teacher(cfg);
  AcquisitionSession session(cfg, std::move(initial), *teacher);
  return session.run();
}

AcquisitionState run_acquisition(const AcquisitionConfig& cfg) {
  return run_acquisition(cfg, initial_demonstrations(cfg));
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const WorldConfig& w) {
  if (w.kind == WorldConfig::Kind::ball) {
    j = nlohmann::json{{"kind", "ball"}, {"radius", w.radius}};
    return;
  }
  j = nlohmann::json{{"kind", "planning"}, {"planner", w.planner}};
  if (!w.model_id.empty()) {
    j["model"] = w.model_id;
  } else if (w.model) {
    j["model"] = *w.model;
  }
  if (w.demo_template) j["template"] = *w.demo_template;
}

void from_json(const nlohmann::json& j, WorldConfig& w) {
  const std::string kind = j.value("kind", "planning");
  if (kind == "ball") {
    w.kind = WorldConfig::Kind::ball;
    w.radius = j.value("radius", w.radius);
    w.model.reset();
    w.model_id.clear();
    return;
  }
  if (kind != "planning") throw std::invalid_argument("world kind must be planning|ball");
  w.kind = WorldConfig::Kind::planning;
  const nlohmann::json& m = j.contains("model") ? j.at("model") : nlohmann::json(w.model_id);
  if (m.is_string()) {
    w.model_id = m.get<std::string>();
    w.model = builtin_model(w.model_id);
  } else {
    w.model_id.clear();
    w.model = model_from_json(m);
  }
  if (j.contains("template")) {
    const auto& t = j.at("template");
    w.demo_template = t.is_string() ? find_template(t.get<std::string>()) : t.get<DemoTemplate>();
  }
  if (j.contains("planner")) w.planner = j.at("planner").get<PlannerSettings>();
}

void to_json(nlohmann::json& j, const TeacherConfig& t) {
  j = nlohmann::json{{"kind", t.kind == TeacherConfig::Kind::interactive ? "interactive" : "simulated"},
                     {"placement_noise", t.placement_noise},
                     {"timeout_s", t.timeout_s}};
}

void from_json(const nlohmann::json& j, TeacherConfig& t) {
  const std::string kind = j.value("kind", "simulated");
  if (kind != "simulated" && kind != "interactive") throw std::invalid_argument("teacher kind must be simulated|interactive");
  t.kind = kind == "interactive" ? TeacherConfig::Kind::interactive : TeacherConfig::Kind::simulated;
  t.placement_noise = j.value("placement_noise", t.placement_noise);
  t.timeout_s = j.value("timeout_s", t.timeout_s);
}

void to_json(nlohmann::json& j, const AcquisitionConfig& c) {
  auto anchors = nlohmann::json::array();
  for (const auto& x : c.initial_anchors) anchors.push_back(x);
  j = nlohmann::json{{"epsilon", c.epsilon},
                     {"delta", c.delta},
                     {"beta", c.beta},
                     {"K", c.K},
                     {"work_area", c.work_area},
                     {"world", c.world},
                     {"teacher", c.teacher},
                     {"initial_anchors", anchors},
                     {"max_demonstrations", c.max_demonstrations},
                     {"seed", c.seed},
                     {"record_samples", c.record_samples},
                     {"threads", c.threads}};
}

TaskInstance anchor_from_json(const nlohmann::json& a, const Region& area) {
  if (a.is_array()) {
    Eigen::Vector3d p = area.pos_min;
    for (std::size_t i = 0; i < a.size() && i < 3; ++i) p[static_cast<int>(i)] = a[i].get<double>();
    return TaskInstance(Pose(area.fixed_q, p));
  }
  if (a.contains("object_poses")) return a.get<TaskInstance>();
  return TaskInstance(a.get<Pose>());
}

void from_json(const nlohmann::json& j, AcquisitionConfig& c) {
  c.epsilon = j.value("epsilon", c.epsilon);
  c.delta = j.value("delta", c.delta);
  c.beta = j.value("beta", c.beta);
  c.K = j.value("K", c.K);
  c.work_area = j.at("work_area").get<Region>();
  if (j.contains("world")) c.world = j.at("world").get<WorldConfig>();
  if (c.world.kind == WorldConfig::Kind::planning && !c.world.model) c.world.model = builtin_model(c.world.model_id);
  if (j.contains("teacher")) c.teacher = j.at("teacher").get<TeacherConfig>();
  c.initial_anchors.clear();
  if (j.contains("initial_anchors")) {
    for (const auto& a : j.at("initial_anchors")) c.initial_anchors.push_back(anchor_from_json(a, c.work_area));
  }
  c.max_demonstrations = j.value("max_demonstrations", c.max_demonstrations);
  c.seed = j.value("seed", c.seed);
  c.record_samples = j.value("record_samples", c.record_samples);
  c.threads = j.value("threads", c.threads);
}

AcquisitionConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open config file " + file.string());
  AcquisitionConfig c = nlohmann::json::parse(in).get<AcquisitionConfig>();
  c.validate();
  return c;
}

nlohmann::json state_to_json(const AcquisitionState& s, bool record_samples) {
  auto history = nlohmann::json::array();
  for (const auto& o : s.history) history.push_back(record_samples ? nlohmann::json(o) : summary_json(o));
  auto log = nlohmann::json::array();
  for (const auto& e : s.log) log.push_back({{"iteration", e.iteration}, {"kind", e.kind}, {"detail", e.detail}});
  return {{"demos", s.demos},
          {"initial_count", s.initial_count},
          {"iteration", s.iteration},
          {"history", history},
          {"terminated", s.terminated == Termination::none ? nlohmann::json(nullptr) : nlohmann::json(to_string(s.terminated))},
          {"achieved_beta", s.achieved_beta},
          {"log", log},
          {"rng", {{"sampling", s.sampling_rng.state()}, {"teacher", s.teacher_rng.state()}}}};
}

AcquisitionState state_from_json(const nlohmann::json& j) {
  AcquisitionState s;
  s.demos = j.at("demos").get<std::vector<Demonstration>>();
  s.initial_count = j.at("initial_count").get<std::size_t>();
  s.iteration = j.at("iteration").get<int>();
  for (const auto& o : j.at("history")) s.history.push_back(bandit_outcome_from_json(o));
  const auto& t = j.at("terminated");
  s.terminated = t.is_null() ? Termination::none : termination_from_string(t.get<std::string>());
  s.achieved_beta = j.at("achieved_beta").get<double>();
  for (const auto& e : j.at("log"))
    s.log.push_back({e.at("iteration").get<int>(), e.at("kind").get<std::string>(), e.at("detail").get<std::string>()});
  s.sampling_rng = Rng::from_state(j.at("rng").at("sampling").get<std::string>());
  s.teacher_rng = Rng::from_state(j.at("rng").at("teacher").get<std::string>());
  return s;
}

void write_checkpoint(const std::filesystem::path& p, const AcquisitionConfig& cfg, const AcquisitionState& s) {
  const nlohmann::json j{{"config", cfg}, {"state", state_to_json(s, cfg.record_samples)}};
  std::filesystem::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out << j.dump(1) << '\n';
    if (!out.flush()) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

std::pair<AcquisitionConfig, AcquisitionState> read_checkpoint(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::invalid_argument("cannot open checkpoint " + p.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  AcquisitionConfig cfg = j.at("config").get<AcquisitionConfig>();
  return {std::move(cfg), state_from_json(j.at("state"))};
}

}  // namespace demosuff
