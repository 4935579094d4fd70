#include "demosuff/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>

namespace demosuff {

using nlohmann::json;

const char* to_string(AcquisitionService::Status s) {
  switch (s) {
    case AcquisitionService::Status::idle: return "idle";
    case AcquisitionService::Status::evaluating: return "evaluating";
    case AcquisitionService::Status::awaiting_demo: return "awaiting_demo";
    case AcquisitionService::Status::done: return "done";
  }
  return "unknown";
}

namespace {

ApiResponse error(int status, const std::string& msg) { return {status, json{{"error", msg}}}; }

json position(const TaskInstance& x) {
  const Eigen::Vector3d p = x.primary().translation();
  return {p.x(), p.y(), p.z()};
}

json anchors_of(const AcquisitionState& s) {
  auto out = json::array();
  for (const Demonstration& d : s.demos) out.push_back({{"id", d.id()}, {"position", position(d.anchor())}});
  return out;
}

}  // namespace

AcquisitionService::~AcquisitionService() { shutdown(); }

void AcquisitionService::shutdown() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  std::shared_ptr<InteractiveTeacher> t;
  {
    std::lock_guard lock(mu_);
    t = teacher_;
  }
  if (t) t->cancel();
  if (worker_.joinable()) worker_.join();
}

AcquisitionService::Status AcquisitionService::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

std::vector<AcquisitionService::Status> AcquisitionService::transitions() const {
  std::lock_guard lock(mu_);
  return transitions_;
}

void AcquisitionService::publish(Status s) {
  {
    std::lock_guard lock(mu_);
    if (status_ == s) return;
    status_ = s;
    transitions_.push_back(s);
  }
  cv_.notify_all();
}

// Worker thread only (or before the worker starts).
void AcquisitionService::publish_snapshot() {
  const AcquisitionState& st = session_->state();
  const AcquisitionConfig& c = session_->config();
  const WorkArea& wa = session_->work_area();

  json state{{"iteration", st.iteration},
             {"demos", st.demos.size()},
             {"initial_demos", st.initial_count},
             {"demo_anchors", anchors_of(st)},
             {"K", wa.K()},
             {"epsilon", c.epsilon},
             {"delta", c.delta},
             {"beta", c.beta},
             {"threshold", 1.0 - c.epsilon - c.beta},
             {"max_demonstrations", c.max_demonstrations},
             {"terminated", st.done() ? json(to_string(st.terminated)) : json(nullptr)},
             {"achieved_beta", st.done() ? json(st.achieved_beta) : json(nullptr)}};
  json heat{{"work_area", wa}, {"iteration", st.iteration}, {"demo_anchors", anchors_of(st)}};
  if (st.history.empty()) {
    state["mu_hat"] = json::array();
    state["best_arm"] = nullptr;
    state["best_mu_hat"] = nullptr;
    auto arms = json::array();
    for (int j = 0; j < wa.K(); ++j) {
      const Region& r = wa.partition[j];
      arms.push_back({{"arm_index", j},
                      {"x_min", r.pos_min.x()},
                      {"x_max", r.pos_max.x()},
                      {"y_min", r.pos_min.y()},
                      {"y_max", r.pos_max.y()},
                      {"mu_hat", nullptr},
                      {"n_samples", 0},
                      {"n_failures", 0},
                      {"samples", json::array()},
                      {"failures", json::array()}});
    }
    heat["best_arm"] = nullptr;
    heat["best_mu_hat"] = nullptr;
    heat["arms"] = arms;
  } else {
    const BanditOutcome& o = st.history.back();
    auto mu = json::array();
    for (const ArmEstimate& e : o.estimates) mu.push_back(e.mu_hat);
    state["mu_hat"] = mu;
    state["best_arm"] = o.best_arm;
    state["best_mu_hat"] = o.best_mu_hat;
    heat.update(heatmap_json(wa, o));
  }
  auto log = json::array();
  const std::size_t from = st.log.size() > 20 ? st.log.size() - 20 : 0;
  for (std::size_t i = from; i < st.log.size(); ++i)
    log.push_back({{"iteration", st.log[i].iteration}, {"kind", st.log[i].kind}, {"detail", st.log[i].detail}});
  state["log"] = log;

  std::lock_guard lock(mu_);
  state["manual"] = manual_;
  state_snapshot_ = std::move(state);
  heatmap_snapshot_ = std::move(heat);
}

void AcquisitionService::run_loop() {
  for (;;) {
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !manual_ || step_tokens_ > 0; });
      if (stopping_) return;
      if (manual_) --step_tokens_;
    }
    publish(Status::evaluating);
    try {
      session_->step();
    } catch (const std::exception& e) {
      {
        std::lock_guard lock(mu_);
        error_ = e.what();
      }
      publish(Status::done);
      return;
    }
    publish_snapshot();
    if (session_->done()) {
      publish(Status::done);
      return;
    }
    publish(Status::evaluating);
  }
}

ApiResponse AcquisitionService::start(const json& body) {
  std::lock_guard control(control_mu_);
  const Status s = status();
  if (s == Status::evaluating || s == Status::awaiting_demo) return error(409, "a session is already running");
  if (!body.is_object() || !body.contains("config")) return error(400, "body must be {\"config\": ...}");

  AcquisitionConfig cfg;
  std::vector<Demonstration> initial;
  try {
    const json& c = body.at("config");
    cfg = c.is_string() ? load_config(c.get<std::string>()) : c.get<AcquisitionConfig>();
    cfg.validate();
  } catch (const std::exception& e) {
    return error(400, std::string("invalid config: ") + e.what());
  }
  if (cfg.teacher.kind != TeacherConfig::Kind::interactive)
    return error(422, "the service needs a config with an interactive teacher");
  try {
    initial = initial_demonstrations(cfg);
  } catch (const std::exception& e) {
    return error(422, e.what());
  }

  if (worker_.joinable()) worker_.join();
  const auto timeout = std::chrono::milliseconds(std::llround(cfg.teacher.timeout_s * 1000.0));
  auto teacher = std::make_shared<InteractiveTeacher>(timeout);
  session_ = std::make_unique<AcquisitionSession>(cfg, std::move(initial), *teacher);
  if (body.contains("checkpoint")) session_->set_checkpoint(body.at("checkpoint").get<std::string>());
  session_->on_suggestion([this](const Suggestion&, const BanditOutcome&) {
    publish_snapshot();
    publish(Status::awaiting_demo);
  });
  {
    std::lock_guard lock(mu_);
    cfg_ = cfg;
    teacher_ = teacher;
    started_ = true;
    manual_ = body.value("manual", false);
    step_tokens_ = 0;
    stopping_ = false;
    error_.clear();
    status_ = Status::idle;
    transitions_ = {Status::idle};
  }
  publish_snapshot();
  publish(Status::evaluating);
  worker_ = std::thread([this] { run_loop(); });
  return {200, json{{"status", "started"}, {"manual", body.value("manual", false)}, {"warnings", cfg.warnings()}}};
}

ApiResponse AcquisitionService::step() {
  std::lock_guard lock(mu_);
  if (!started_) return error(409, "no session; POST /api/start first");
  if (!manual_) return error(409, "session advances automatically; start it with \"manual\": true");
  if (status_ == Status::done) return error(409, "session has terminated");
  if (status_ == Status::awaiting_demo) return error(409, "a suggestion is waiting for a demonstration");
  ++step_tokens_;
  cv_.notify_all();
  return {202, json{{"status", to_string(status_)}, {"queued_steps", step_tokens_}}};
}

ApiResponse AcquisitionService::state() const {
  std::lock_guard lock(mu_);
  if (!started_) return {200, json{{"status", "idle"}}};
  json j = state_snapshot_;
  j["status"] = to_string(status_);
  if (!error_.empty()) j["error"] = error_;
  return {200, j};
}

ApiResponse AcquisitionService::heatmap() const {
  std::lock_guard lock(mu_);
  if (!started_) return error(409, "no session; POST /api/start first");
  return {200, heatmap_snapshot_};
}

ApiResponse AcquisitionService::suggestion() const {
  std::shared_ptr<InteractiveTeacher> t;
  {
    std::lock_guard lock(mu_);
    t = teacher_;
  }
  const std::optional<Suggestion> s = t ? t->pending() : std::nullopt;
  if (!s) return {200, json{{"pending", false}}};
  return {200, json{{"pending", true},
                    {"iteration", s->iteration},
                    {"arm", s->arm},
                    {"demo_id", s->demo_id},
                    {"region", s->region},
                    {"instance", s->instance},
                    {"position", position(s->instance)}}};
}

ApiResponse AcquisitionService::demonstration(const json& body) {
  std::lock_guard control(control_mu_);
  std::shared_ptr<InteractiveTeacher> t;
  std::optional<AcquisitionConfig> cfg;
  double best_mu = 0.0;
  {
    std::lock_guard lock(mu_);
    t = teacher_;
    cfg = cfg_;
    if (state_snapshot_.contains("best_mu_hat") && state_snapshot_["best_mu_hat"].is_number())
      best_mu = state_snapshot_["best_mu_hat"].get<double>();
  }
  if (!t || !cfg) return error(409, "no session; POST /api/start first");
  const std::optional<Suggestion> s = t->pending();
  if (!s) return error(409, "no suggestion is pending");
  if (!body.is_object()) return error(400, "body must be a JSON object");

  if (body.value("refuse", false)) {
    if (!t->submit(std::nullopt)) return error(409, "the suggestion was already answered or timed out");
    return {200, json{{"refused", true},
                      {"iteration", s->iteration},
                      {"achieved_beta", early_stop_beta(best_mu, cfg->epsilon)}}};
  }

  std::optional<Demonstration> d;
  try {
    const TaskInstance anchor = body.contains("anchor") ? anchor_from_json(body.at("anchor"), cfg->work_area) : s->instance;
    if (!cfg->work_area.contains(anchor.primary().translation(), 1e-9))
      return error(422, "anchor lies outside the work area");
    if (body.contains("waypoints_object_frame")) {
      auto wps = body.at("waypoints_object_frame").get<std::vector<Pose>>();
      if (wps.empty()) return error(400, "waypoints_object_frame is empty");
      d = demonstration_from_waypoints(*cfg, s->demo_id, anchor, std::move(wps));
      if (!d) return error(422, "the arm cannot execute these waypoints");
    } else if (body.contains("template")) {
      if (cfg->world.kind == WorldConfig::Kind::ball) {
        d = AnchorTeacher::at(anchor, s->demo_id);
      } else {
        const SimulatedTeacher st(find_template(body.at("template").get<std::string>()), cfg->world.manipulator(),
                                  cfg->world.planner, cfg->work_area, 0.0);
        d = st.demonstrate_at(anchor, s->demo_id);
        if (!d) return error(422, "the arm cannot execute this template at the anchor");
      }
    } else {
      return error(400, "need waypoints_object_frame, template, or refuse");
    }
  } catch (const std::exception& e) {
    return error(400, e.what());
  }
  const json anchor_pos = position(d->anchor());
  const std::string id = d->id();
  if (!t->submit(std::move(d))) return error(409, "the suggestion was already answered or timed out");
  return {200, json{{"accepted", true}, {"demo_id", id}, {"iteration", s->iteration}, {"anchor", anchor_pos}}};
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

template <class F>
httplib::Server::Handler with_body(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    json body = json::object();
    if (!req.body.empty()) {
      body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return reply(res, error(400, "malformed JSON body"));
    }
    reply(res, f(body));
  };
}

}  // namespace

void mount(httplib::Server& server, AcquisitionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Get("/api/state", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.state()); });
  server.Get("/api/heatmap", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.heatmap()); });
  server.Get("/api/suggestion",
             [&](const httplib::Request&, httplib::Response& res) { reply(res, service.suggestion()); });
  server.Post("/api/start", with_body([&](const json& b) { return service.start(b); }));
  server.Post("/api/step", with_body([&](const json&) { return service.step(); }));
  server.Post("/api/demonstration", with_body([&](const json& b) { return service.demonstration(b); }));
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(json{{"error", httplib::status_message(res.status)}}.dump(), "application/json");
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    reply(res, error(500, msg));
  });
}

void serve(const std::string& host, int port, const std::optional<json>& start_body) {
  httplib::Server server;
  AcquisitionService service;
  mount(server, service);
  if (start_body) {
    const ApiResponse r = service.start(*start_body);
    if (r.status != 200) throw std::runtime_error("cannot start session: " + r.body.value("error", std::string("?")));
  }
  if (!server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  server.listen_after_bind();
}

}  // namespace demosuff
