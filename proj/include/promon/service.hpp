#pragma once

#include <memory>
#include <string>
#include <vector>

#include "promon/backend.hpp"
#include "promon/labeling.hpp"
#include "promon/rewards.hpp"

namespace promon {

struct BackendSettings {
  std::string type = "mock";  // "mock" | "remote"
  std::string base_url;
  std::string model;
  std::string api_key_env = "PROMON_API_KEY";
  double timeout_seconds = 60.0;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  BackendSettings backend;
  SegmentationConfig segmentation;
  RewardConfig reward;
  int retry_budget = 2;
  double idle_timeout_seconds = 3600.0;
  std::string transcript_dir = "transcripts";
};

/// Parses and validates a config document. Violations name the offending
/// field.
ServiceConfig service_config_from_json_text(const std::string& text);
std::vector<std::string> validate(const ServiceConfig& cfg);

/// HTTP facade over sessions, reward scoring, and health.
///
///   POST /v1/sessions                 create a session (201)
///   POST /v1/sessions/{id}/turns      run one turn (200)
///   POST /v1/rewards/score            stateless reward scoring (200)
///   GET  /healthz                     liveness + backend reachability (200)
///
/// Turn handling is serialized per session (a concurrent turn gets 409);
/// distinct sessions run concurrently. Idle sessions are evicted after the
/// configured timeout; accepted turns are appended to the session transcript
/// as they happen.
class ProgressService {
 public:
  explicit ProgressService(ServiceConfig cfg);
  ~ProgressService();

  ProgressService(const ProgressService&) = delete;
  ProgressService& operator=(const ProgressService&) = delete;

  /// Binds and serves on a background thread; returns once ready.
  bool start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promon
