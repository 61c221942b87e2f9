#include "promon/service.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "promon/engine.hpp"
#include "promon/json_io.hpp"
#include "promon/util.hpp"

namespace promon {

using nlohmann::json;

namespace {

json error_body(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, error_body(code, message));
}

double get_number(const json& j, const char* key, double fallback) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : fallback;
}

}  // namespace

ServiceConfig service_config_from_json_text(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error("config: document is not a JSON object");
  }
  ServiceConfig cfg;
  cfg.host = j.value("host", cfg.host);
  cfg.port = j.value("port", cfg.port);
  cfg.retry_budget = j.value("retry_budget", cfg.retry_budget);
  cfg.idle_timeout_seconds = get_number(j, "idle_timeout_seconds", cfg.idle_timeout_seconds);
  cfg.transcript_dir = j.value("transcript_dir", cfg.transcript_dir);
  if (j.contains("backend")) {
    const json& b = j["backend"];
    cfg.backend.type = b.value("type", cfg.backend.type);
    cfg.backend.base_url = b.value("base_url", cfg.backend.base_url);
    cfg.backend.model = b.value("model", cfg.backend.model);
    cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
    cfg.backend.timeout_seconds = get_number(b, "timeout_seconds", cfg.backend.timeout_seconds);
  }
  if (j.contains("segmentation")) {
    const json& s = j["segmentation"];
    cfg.segmentation.snippet_seconds =
        get_number(s, "snippet_seconds", cfg.segmentation.snippet_seconds);
    cfg.segmentation.frames_per_snippet =
        s.value("frames_per_snippet", cfg.segmentation.frames_per_snippet);
    cfg.segmentation.fps = get_number(s, "fps", cfg.segmentation.fps);
  }
  if (j.contains("reward")) {
    const json& r = j["reward"];
    cfg.reward.delta1 = get_number(r, "delta1", cfg.reward.delta1);
    cfg.reward.delta2 = get_number(r, "delta2", cfg.reward.delta2);
    cfg.reward.alpha = get_number(r, "alpha", cfg.reward.alpha);
    cfg.reward.beta = get_number(r, "beta", cfg.reward.beta);
    cfg.reward.imp_clip_lo = get_number(r, "imp_clip_lo", cfg.reward.imp_clip_lo);
    cfg.reward.imp_clip_hi = get_number(r, "imp_clip_hi", cfg.reward.imp_clip_hi);
  }
  return cfg;
}

std::vector<std::string> validate(const ServiceConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.host.empty()) out.push_back("host: must not be empty");
  if (cfg.port < 0 || cfg.port > 65535) out.push_back("port: outside [0, 65535]");
  if (cfg.retry_budget < 0) out.push_back("retry_budget: must be >= 0");
  if (!(cfg.idle_timeout_seconds > 0.0)) out.push_back("idle_timeout_seconds: must be positive");
  if (cfg.transcript_dir.empty()) out.push_back("transcript_dir: must not be empty");
  if (cfg.backend.type != "mock" && cfg.backend.type != "remote") {
    out.push_back("backend.type: must be \"mock\" or \"remote\"");
  }
  if (cfg.backend.type == "remote" && cfg.backend.base_url.empty()) {
    out.push_back("backend.base_url: required for the remote backend");
  }
  if (!(cfg.backend.timeout_seconds > 0.0)) {
    out.push_back("backend.timeout_seconds: must be positive");
  }
  for (const auto& v : validate(cfg.segmentation)) out.push_back("segmentation." + v);
  for (const auto& v : validate(cfg.reward)) out.push_back("reward." + v);
  return out;
}

struct ProgressService::Impl {
  explicit Impl(ServiceConfig config) : cfg(std::move(config)), rng(std::random_device{}()) {}

  ServiceConfig cfg;
  httplib::Server server;
  std::thread server_thread;
  int bound_port = 0;

  struct Entry {
    std::unique_ptr<Session> session;
    std::mutex busy;
    std::chrono::steady_clock::time_point last_used;
    std::ofstream transcript;
  };

  std::mutex registry_mutex;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions;
  std::mt19937_64 rng;
  std::shared_ptr<Backend> remote_backend;  // shared across sessions when remote

  std::string new_session_id() {
    static const char* hex = "0123456789abcdef";
    std::string id(16, '0');
    std::uniform_int_distribution<int> d(0, 15);
    for (char& c : id) c = hex[d(rng)];
    return id;
  }

  std::shared_ptr<Backend> default_backend() {
    if (cfg.backend.type == "remote") {
      if (!remote_backend) {
        RemoteBackendConfig rc;
        rc.base_url = cfg.backend.base_url;
        rc.model = cfg.backend.model;
        rc.api_key_env = cfg.backend.api_key_env;
        rc.timeout_seconds = cfg.backend.timeout_seconds;
        remote_backend = std::make_shared<RemoteBackend>(rc);
      }
      return remote_backend;
    }
    return nullptr;  // mock backends are per-session (they carry an annotation)
  }

  void evict_idle() {
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard<std::mutex> lock(registry_mutex);
    for (auto it = sessions.begin(); it != sessions.end();) {
      auto& entry = *it->second;
      const double idle =
          std::chrono::duration<double>(now - entry.last_used).count();
      if (idle > cfg.idle_timeout_seconds && entry.busy.try_lock()) {
        entry.transcript.close();  // turns were persisted as they happened
        entry.busy.unlock();
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard<std::mutex> lock(registry_mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void handle_create(const httplib::Request& req, httplib::Response& res);
  void handle_turn(const httplib::Request& req, httplib::Response& res);
  void handle_score(const httplib::Request& req, httplib::Response& res);
  void handle_health(const httplib::Request& req, httplib::Response& res);
};

void ProgressService::Impl::handle_create(const httplib::Request& req, httplib::Response& res) {
  evict_idle();
  const json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    return send_error(res, 400, "bad_request", "body must be a JSON object");
  }
  const std::string task = body.value("task", "");
  if (util::only_whitespace(task)) {
    return send_error(res, 400, "bad_request", "task must not be empty");
  }

  EngineConfig engine_cfg{cfg.segmentation, cfg.reward, cfg.retry_budget};
  if (body.contains("config") && body["config"].is_object()) {
    const json& c = body["config"];
    engine_cfg.retry_budget = c.value("retry_budget", engine_cfg.retry_budget);
    if (c.contains("segmentation")) {
      const json& s = c["segmentation"];
      engine_cfg.segmentation.snippet_seconds =
          get_number(s, "snippet_seconds", engine_cfg.segmentation.snippet_seconds);
      engine_cfg.segmentation.frames_per_snippet =
          s.value("frames_per_snippet", engine_cfg.segmentation.frames_per_snippet);
      engine_cfg.segmentation.fps = get_number(s, "fps", engine_cfg.segmentation.fps);
    }
    if (c.contains("reward")) {
      const json& r = c["reward"];
      engine_cfg.reward.delta1 = get_number(r, "delta1", engine_cfg.reward.delta1);
      engine_cfg.reward.delta2 = get_number(r, "delta2", engine_cfg.reward.delta2);
      engine_cfg.reward.alpha = get_number(r, "alpha", engine_cfg.reward.alpha);
      engine_cfg.reward.beta = get_number(r, "beta", engine_cfg.reward.beta);
    }
  }

  std::shared_ptr<Backend> backend;
  if (cfg.backend.type == "mock") {
    if (!body.contains("annotation")) {
      return send_error(res, 400, "bad_request",
                        "the mock backend requires an annotation in the session body");
    }
    TaskAnnotation a;
    try {
      a = io::annotation_from_json(body["annotation"]);
    } catch (const std::exception& e) {
      return send_error(res, 400, "bad_request", e.what());
    }
    const auto violations = validate_annotation(a);
    if (!violations.empty()) {
      return send_error(res, 400, "bad_request", util::join(violations, "; "));
    }
    MockOracleConfig mock;
    if (body.contains("mock") && body["mock"].is_object()) {
      const json& m = body["mock"];
      mock.noise_amplitude = get_number(m, "noise_amplitude", 0.0);
      mock.malformed_rate = get_number(m, "malformed_rate", 0.0);
      mock.seed = m.value("seed", 0ULL);
      mock.transport_fail_first = m.value("transport_fail_first", 0);
      mock.latency_ms = m.value("latency_ms", 0);
    }
    backend = std::make_shared<MockOracleBackend>(std::move(a), std::nullopt, mock);
  } else {
    backend = default_backend();
  }
  if (!backend || !backend->healthy()) {
    return send_error(res, 503, "backend_unavailable", "backend health check failed");
  }

  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard<std::mutex> lock(registry_mutex);
    do {
      id = new_session_id();
    } while (sessions.count(id) != 0);
    entry->session = std::make_unique<Session>(id, task, backend, engine_cfg);
    entry->last_used = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.transcript_dir);
    entry->transcript.open(std::filesystem::path(cfg.transcript_dir) / (id + ".jsonl"),
                           std::ios::trunc);
    sessions.emplace(id, entry);
  }
  send_json(res, 201, json{{"session_id", id}});
}

void ProgressService::Impl::handle_turn(const httplib::Request& req, httplib::Response& res) {
  evict_idle();
  const std::string id = req.path_params.at("id");
  auto entry = find(id);
  if (!entry) return send_error(res, 404, "not_found", "unknown session: " + id);

  std::unique_lock<std::mutex> busy(entry->busy, std::try_to_lock);
  if (!busy.owns_lock()) {
    return send_error(res, 409, "busy", "a turn is already in flight for this session");
  }
  entry->last_used = std::chrono::steady_clock::now();

  Session& session = *entry->session;
  if (session.state() == SessionState::finished) {
    return send_error(res, 409, "finished", "session already reported completion");
  }

  const json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("frames") ||
      !body["frames"].is_array()) {
    return send_error(res, 400, "bad_request", "body must carry a frames array");
  }
  const json& jframes = body["frames"];
  const int expected = session.config().segmentation.frames_per_snippet;
  if (static_cast<int>(jframes.size()) != expected) {
    return send_error(res, 422, "wrong_frame_count",
                      "expected " + std::to_string(expected) + " frames, got " +
                          std::to_string(jframes.size()));
  }

  Snippet snippet;
  snippet.index = session.turn() + 1;
  double prev_ts = -1.0;
  for (const json& jf : jframes) {
    Frame f;
    if (!jf.contains("ts") || !jf["ts"].is_number()) {
      return send_error(res, 400, "bad_request", "frame missing numeric ts");
    }
    f.timestamp = jf["ts"].get<double>();
    if (jf.contains("image_b64") && jf["image_b64"].is_string()) {
      f.payload = {ImagePayload::Kind::base64, jf["image_b64"].get<std::string>()};
    } else if (jf.contains("uri") && jf["uri"].is_string()) {
      f.payload = {ImagePayload::Kind::uri, jf["uri"].get<std::string>()};
    } else {
      return send_error(res, 400, "bad_request", "frame needs image_b64 or uri");
    }
    if (jf.contains("media_type") && jf["media_type"].is_string()) {
      f.media_type = jf["media_type"].get<std::string>();
    }
    if (f.timestamp < prev_ts) {
      return send_error(res, 400, "bad_request", "frame timestamps must be non-decreasing");
    }
    prev_ts = f.timestamp;
    snippet.frames.push_back(std::move(f));
  }
  snippet.t_begin = snippet.frames.front().timestamp;
  snippet.t_end = snippet.frames.back().timestamp;

  std::optional<GroundTruthTurn> gt;
  if (body.contains("ground_truth") && !body["ground_truth"].is_null()) {
    try {
      gt = io::ground_truth_from_json(body["ground_truth"]);
    } catch (const std::exception& e) {
      return send_error(res, 400, "bad_request", e.what());
    }
    const auto violations = validate_ground_truth(*gt);
    if (!violations.empty()) {
      return send_error(res, 400, "bad_request", util::join(violations, "; "));
    }
  }

  try {
    const TurnRecord rec = session.run_turn(snippet, gt);
    const auto row = io::turn_record_to_json(rec);
    entry->transcript << row.dump() << '\n';
    entry->transcript.flush();
    send_json(res, 200, row);
  } catch (const TransportError& e) {
    send_error(res, 502, std::string("transport_") + to_string(e.category()), e.what());
  } catch (const SessionError& e) {
    send_error(res, 409, "conflict", e.what());
  } catch (const std::exception& e) {
    send_error(res, 400, "bad_request", e.what());
  }
}

void ProgressService::Impl::handle_score(const httplib::Request& req, httplib::Response& res) {
  const json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    return send_error(res, 400, "bad_request", "body must be a JSON object");
  }
  if (!body.contains("p_t") || !body.contains("gt_t") || !body.contains("n") ||
      !body.contains("m")) {
    return send_error(res, 400, "bad_request", "required fields: p_t, gt_t, n, m");
  }
  GroundTruthTurn gt;
  gt.p_gt.value = get_number(body, "gt_t", 0.0);
  gt.n_gt = body.value("n", 1);
  gt.m_gt = body.value("m", 0);
  const auto violations = validate_ground_truth(gt);
  if (!violations.empty()) {
    return send_error(res, 400, "bad_request", util::join(violations, "; "));
  }
  const double p_t = get_number(body, "p_t", 0.0);
  if (p_t < 0.0 || p_t > 100.0) {
    return send_error(res, 400, "bad_request", "p_t: outside [0, 100]");
  }
  const bool has_p_prev = body.contains("p_prev") && !body["p_prev"].is_null();
  const bool has_gt_prev = body.contains("gt_prev") && !body["gt_prev"].is_null();
  if (has_p_prev != has_gt_prev) {
    return send_error(res, 400, "bad_request", "p_prev and gt_prev must be jointly present");
  }
  std::optional<Progress> p_prev;
  std::optional<Progress> gt_prev;
  if (has_p_prev) {
    p_prev = Progress{get_number(body, "p_prev", 0.0)};
    gt_prev = Progress{get_number(body, "gt_prev", 0.0)};
  }
  std::optional<std::string> raw;
  if (body.contains("raw_output") && body["raw_output"].is_string()) {
    raw = body["raw_output"].get<std::string>();
  }

  const RewardBreakdown rb = overall_reward(
      raw ? std::optional<std::string_view>(*raw) : std::nullopt, Progress{p_t}, p_prev, gt,
      gt_prev, cfg.reward);
  auto out = io::reward_breakdown_to_json(rb);
  out["config"] = io::reward_config_to_json(cfg.reward);
  send_json(res, 200, out);
}

void ProgressService::Impl::handle_health(const httplib::Request&, httplib::Response& res) {
  bool reachable = true;
  if (cfg.backend.type == "remote") {
    auto backend = default_backend();
    reachable = backend && backend->healthy();
  }
  send_json(res, 200, json{{"status", "ok"}, {"backend_reachable", reachable}});
}

ProgressService::ProgressService(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
  const auto violations = validate(impl_->cfg);
  if (!violations.empty()) {
    throw std::invalid_argument("service config: " + util::join(violations, "; "));
  }
  impl_->server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->handle_create(req, res);
  });
  impl_->server.Post("/v1/sessions/:id/turns",
                     [this](const httplib::Request& req, httplib::Response& res) {
                       impl_->handle_turn(req, res);
                     });
  impl_->server.Post("/v1/rewards/score",
                     [this](const httplib::Request& req, httplib::Response& res) {
                       impl_->handle_score(req, res);
                     });
  impl_->server.Get("/healthz", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->handle_health(req, res);
  });
}

ProgressService::~ProgressService() { stop(); }

bool ProgressService::start() {
  if (impl_->cfg.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->cfg.host);
    if (impl_->bound_port <= 0) return false;
  } else {
    if (!impl_->server.bind_to_port(impl_->cfg.host, impl_->cfg.port)) return false;
    impl_->bound_port = impl_->cfg.port;
  }
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return true;
}

void ProgressService::stop() {
  if (impl_->server_thread.joinable()) {
    impl_->server.stop();
    impl_->server_thread.join();
  }
}

int ProgressService::port() const { return impl_->bound_port; }

}  // namespace promon
