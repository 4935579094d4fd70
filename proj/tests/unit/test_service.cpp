#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "demosuff/service.hpp"

// After Eigen: resolv.h defines _res.
#include <httplib.h>

using namespace demosuff;
using nlohmann::json;
using Status = AcquisitionService::Status;

namespace {

json planar_config(double timeout_s = 30.0) {
  std::ifstream in(std::filesystem::path(DEMOSUFF_DATA_DIR) / "configs" / "planar_interactive.json");
  json c = json::parse(in);
  c["teacher"]["timeout_s"] = timeout_s;
  return c;
}

// Scripted client against a live server on an ephemeral port.
struct Harness {
  httplib::Server server;
  AcquisitionService service;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;

  Harness() {
    mount(server, service);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(30, 0);
  }
  ~Harness() {
    service.shutdown();
    server.stop();
    thread.join();
  }

  std::pair<int, json> get(const std::string& path) {
    auto r = client->Get(path);
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }
  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto r = client->Post(path, body, "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }
  std::pair<int, json> post(const std::string& path, const json& body) { return post(path, body.dump()); }

  json wait_for(const std::function<bool(const json&)>& pred) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
    for (;;) {
      json s = get("/api/state").second;
      if (pred(s)) return s;
      REQUIRE(std::chrono::steady_clock::now() < deadline);
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  json wait_status(const std::string& status) {
    return wait_for([&](const json& s) { return s["status"] == status; });
  }
};

bool valid_machine(const std::vector<Status>& t) {
  if (t.empty() || t.front() != Status::idle) return false;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const Status a = t[i - 1], b = t[i];
    const bool ok = (a == Status::idle && b == Status::evaluating) ||
                    (a == Status::evaluating && (b == Status::awaiting_demo || b == Status::done)) ||
                    (a == Status::awaiting_demo && (b == Status::evaluating || b == Status::done));
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("service: protocol errors before a session exists") {
  Harness h;
  auto [s0, state] = h.get("/api/state");
  CHECK(s0 == 200);
  CHECK(state == json{{"status", "idle"}});
  CHECK(h.post("/api/demonstration", json{{"refuse", true}}).first == 409);
  CHECK(h.post("/api/step", json::object()).first == 409);
  CHECK(h.get("/api/heatmap").first == 409);
  CHECK(h.get("/api/suggestion").second == json{{"pending", false}});

  auto [s1, e1] = h.post("/api/start", std::string("{not json"));
  CHECK(s1 == 400);
  CHECK(e1.contains("error"));
  CHECK(h.post("/api/start", json{{"nothing", 1}}).first == 400);
  json simulated = planar_config();
  simulated["teacher"]["kind"] = "simulated";
  CHECK(h.post("/api/start", json{{"config", simulated}}).first == 422);
  json bad = planar_config();
  bad["epsilon"] = 2.0;
  CHECK(h.post("/api/start", json{{"config", bad}}).first == 400);
  auto [s404, e404] = h.get("/api/nothing");
  CHECK(s404 == 404);
  CHECK(e404.contains("error"));
}

TEST_CASE("service: suggestion, demonstration, heatmap refresh, refusal") {
  Harness h;
  auto [s, started] = h.post("/api/start", json{{"config", planar_config()}});
  REQUIRE(s == 200);
  CHECK(h.post("/api/start", json{{"config", planar_config()}}).first == 409);

  json st = h.wait_status("awaiting_demo");
  CHECK(st["iteration"] == 1);
  CHECK(st["mu_hat"].size() == 4);
  CHECK(st["best_mu_hat"].get<double>() > 0.0);
  const auto [hs, heat] = h.get("/api/heatmap");
  CHECK(hs == 200);
  CHECK(heat["arms"].size() == 4);
  CHECK(heat["arms"][0]["samples"].size() == heat["arms"][0]["n_samples"].get<std::size_t>());
  CHECK(heat["demo_anchors"].size() == 1);

  const auto [gs, sug] = h.get("/api/suggestion");
  REQUIRE(sug["pending"] == true);
  CHECK(sug["demo_id"] == "demo-1");
  const TaskInstance target = sug["instance"].get<TaskInstance>();
  const Region region = sug["region"].get<Region>();
  CHECK(region.contains(target.primary().translation(), 1e-9));

  // Waypoints the arm cannot follow, an empty list, and an anchor off the table are rejected
  // without consuming the suggestion.
  const AcquisitionConfig cfg = planar_config().get<AcquisitionConfig>();
  SimulatedTeacher teacher(cfg.world.task_template(), cfg.world.manipulator(), cfg.world.planner, cfg.work_area, 0.0);
  std::vector<Pose> wps = teacher.object_frame_waypoints(target);
  json far = json(wps);
  far[1]["t"][0] = 3.0;
  CHECK(h.post("/api/demonstration", json{{"anchor", sug["position"]}, {"waypoints_object_frame", far}}).first == 422);
  CHECK(h.post("/api/demonstration", json{{"waypoints_object_frame", json::array()}}).first == 400);
  CHECK(h.post("/api/demonstration", json{{"anchor", {5.0, 5.0}}, {"template", "planar_scoop"}}).first == 422);
  CHECK(h.post("/api/demonstration", json{{"anchor", sug["position"]}}).first == 400);
  CHECK(h.get("/api/suggestion").second["pending"] == true);

  auto [ds, ack] = h.post("/api/demonstration", json{{"anchor", sug["position"]}, {"waypoints_object_frame", wps}});
  CHECK(ds == 200);
  CHECK(ack["accepted"] == true);
  CHECK(ack["demo_id"] == "demo-1");
  // A second answer to the same suggestion is a protocol violation.
  const int again = h.post("/api/demonstration", json{{"refuse", true}}).first;
  CHECK((again == 409 || again == 200));
  if (again == 200) return;  // the loop already asked again and that answer was taken

  st = h.wait_for([](const json& x) { return x["iteration"] == 2 && x["status"] != "evaluating"; });
  CHECK(st["demos"] == 2);
  CHECK(h.get("/api/heatmap").second["demo_anchors"].size() == 2);

  if (st["status"] == "awaiting_demo") {
    const json sug2 = h.get("/api/suggestion").second;
    CHECK(sug2["demo_id"] == "demo-2");
    const double mu = st["best_mu_hat"].get<double>();
    auto [rs, refused] = h.post("/api/demonstration", json{{"refuse", true}});
    CHECK(rs == 200);
    CHECK(refused["achieved_beta"].get<double>() == doctest::Approx(std::max(0.0, 1.0 - 0.1 - mu)));
    st = h.wait_status("done");
    CHECK(st["terminated"] == "teacher_refused");
    CHECK(st["achieved_beta"].get<double>() == refused["achieved_beta"].get<double>());
  } else {
    CHECK(st["terminated"] == "sufficient");
  }
  CHECK(h.post("/api/demonstration", json{{"refuse", true}}).first == 409);
  CHECK(valid_machine(h.service.transitions()));
}

TEST_CASE("service: template answers and manual stepping") {
  Harness h;
  REQUIRE(h.post("/api/start", json{{"config", planar_config()}, {"manual", true}}).first == 200);
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  json st = h.get("/api/state").second;
  CHECK(st["iteration"] == 0);
  CHECK(st["manual"] == true);
  CHECK(h.get("/api/heatmap").second["arms"][0]["mu_hat"].is_null());

  CHECK(h.post("/api/step", json::object()).first == 202);
  st = h.wait_for([](const json& x) { return x["status"] == "awaiting_demo" || x["status"] == "done"; });
  REQUIRE(st["status"] == "awaiting_demo");
  CHECK(h.post("/api/step", json::object()).first == 409);
  const json sug = h.get("/api/suggestion").second;
  auto [ds, ack] = h.post("/api/demonstration", json{{"anchor", sug["position"]}, {"template", "planar_scoop"}});
  CHECK(ds == 200);
  st = h.wait_for([](const json& x) { return x["demos"] == 2; });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  // Without another step the loop holds after accepting.
  st = h.get("/api/state").second;
  CHECK(st["iteration"] == 1);
  CHECK(st["status"] == "evaluating");
  CHECK(h.post("/api/step", json::object()).first == 202);
  h.wait_for([](const json& x) { return x["iteration"] == 2 && x["status"] != "evaluating"; });
  CHECK(valid_machine(h.service.transitions()));
}

TEST_CASE("service: an unanswered suggestion times out as a refusal") {
  AcquisitionService service;
  REQUIRE(service.start(json{{"config", planar_config(0.2)}}).status == 200);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  while (service.status() != Status::done) {
    REQUIRE(std::chrono::steady_clock::now() < deadline);
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  const json st = service.state().body;
  CHECK(st["terminated"] == "teacher_refused");
  CHECK(st["iteration"] == 1);
  CHECK(valid_machine(service.transitions()));
  CHECK(service.transitions() ==
        std::vector<Status>{Status::idle, Status::evaluating, Status::awaiting_demo, Status::done});
}
