#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "demosuff/acquisition.hpp"

namespace httplib {
class Server;
}

namespace demosuff {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// One acquisition session driven by a human through the HTTP API. The loop runs
// on a worker thread; GET handlers read snapshots published by that thread, so
// they never wait on a bandit round or a pending suggestion.
//
// Status machine: idle -> evaluating -> awaiting_demo -> (evaluating | done).
class AcquisitionService {
 public:
  enum class Status { idle, evaluating, awaiting_demo, done };

  AcquisitionService() = default;
  ~AcquisitionService();
  AcquisitionService(const AcquisitionService&) = delete;
  AcquisitionService& operator=(const AcquisitionService&) = delete;

  /// {"config": {...}, "manual": bool, "checkpoint": path}. Manual sessions
  /// advance only on step(); otherwise the loop runs until it terminates.
  ApiResponse start(const nlohmann::json& body);
  ApiResponse step();
  ApiResponse state() const;
  ApiResponse heatmap() const;
  ApiResponse suggestion() const;
  /// {"refuse": true} | {"anchor"?, "waypoints_object_frame": [...]} | {"anchor"?, "template": name}
  ApiResponse demonstration(const nlohmann::json& body);

  Status status() const;
  /// Every status the session has entered, in order.
  std::vector<Status> transitions() const;
  /// Cancels a pending suggestion and joins the worker.
  void shutdown();

 private:
  void run_loop();
  void publish(Status s);
  void publish_snapshot();

  std::mutex control_mu_;  // serializes start/demonstration
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::optional<AcquisitionConfig> cfg_;
  std::shared_ptr<InteractiveTeacher> teacher_;
  std::unique_ptr<AcquisitionSession> session_;
  std::thread worker_;
  bool started_ = false;
  bool manual_ = false;
  int step_tokens_ = 0;
  bool stopping_ = false;
  Status status_ = Status::idle;
  std::vector<Status> transitions_{Status::idle};
  nlohmann::json state_snapshot_;
  nlohmann::json heatmap_snapshot_;
  std::string error_;
};

const char* to_string(AcquisitionService::Status s);

/// Routes /api/* onto the service; malformed requests get 4xx with {"error": ...}.
void mount(httplib::Server& server, AcquisitionService& service);

/// Blocks serving on host:port. Throws std::runtime_error if the port cannot be bound.
void serve(const std::string& host, int port, const std::optional<nlohmann::json>& start_body = std::nullopt);

}  // namespace demosuff
