#include "promon/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "promon/ledger.hpp"
#include "promon/prompts.hpp"
#include "promon/util.hpp"

namespace promon {

using nlohmann::json;

const char* to_string(TransportError::Category c) {
  switch (c) {
    case TransportError::Category::timeout: return "timeout";
    case TransportError::Category::connection: return "connection";
    case TransportError::Category::http_status: return "http_status";
    case TransportError::Category::protocol: return "protocol";
  }
  return "unknown";
}

std::string render_full_prompt(const BackendRequest& req) {
  return prompts::render_estimation_prompt(req.history_cot,
                                           static_cast<int>(req.frames.size()), req.question);
}

// ---------------------------------------------------------------------------
// Mock oracle
// ---------------------------------------------------------------------------

MockOracleBackend::MockOracleBackend(TaskAnnotation annotation,
                                     std::optional<DistractorSpec> distractor,
                                     MockOracleConfig cfg)
    : annotation_(std::move(annotation)), distractor_(std::move(distractor)), cfg_(cfg),
      rng_(cfg.seed) {}

std::string MockOracleBackend::complete(const BackendRequest& req) {
  if (cfg_.latency_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.latency_ms));
  }
  if (calls_ < cfg_.transport_fail_first) {
    ++calls_;
    throw TransportError(TransportError::Category::connection, "injected transport failure");
  }
  ++calls_;
  if (req.frames.empty()) {
    throw TransportError(TransportError::Category::protocol, "request carries no frames");
  }
  if (cfg_.malformed_rate > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng_) < cfg_.malformed_rate) {
      return "The task seems to be moving along; I will keep watching the stream.";
    }
  }

  const double t = req.frames.back().timestamp;
  const Progress label = distractor_ ? compute_distractor_label(annotation_, *distractor_, t)
                                     : compute_progress_label(annotation_, t);
  long answer = std::lround(label.value);  // nearest integer, ties up
  if (cfg_.noise_amplitude > 0.0) {
    std::uniform_real_distribution<double> noise(-cfg_.noise_amplitude, cfg_.noise_amplitude);
    answer = std::lround(static_cast<double>(answer) + noise(rng_));
  }
  answer = std::clamp(answer, 0L, 100L);

  const int k = completed_steps_at(annotation_, t);
  std::vector<std::string> completed, in_progress, pending;
  for (std::size_t i = 0; i < annotation_.steps.size(); ++i) {
    const Step& s = annotation_.steps[i];
    if (static_cast<int>(i) < k) {
      completed.push_back(s.description);
    } else if (t >= s.t_start && t < s.t_end) {
      in_progress.push_back(s.description);
    } else {
      pending.push_back(s.description);
    }
  }

  const std::string body =
      render_marker_cot(util::to_lower(annotation_.task), static_cast<int>(answer), completed,
                        in_progress, pending);
  return "<think>\n" + body + "\n</think>\n<answer>\n" + std::to_string(answer) + "\n</answer>";
}

// ---------------------------------------------------------------------------
// Mock text backend
// ---------------------------------------------------------------------------

namespace {

std::string_view line_after(std::string_view text, std::string_view anchor) {
  const std::size_t at = text.find(anchor);
  if (at == std::string_view::npos) return {};
  const std::size_t start = at + anchor.size();
  const std::size_t end = text.find('\n', start);
  return text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
}

std::string_view section_between(std::string_view text, std::string_view from,
                                 std::string_view to) {
  const std::size_t a = text.find(from);
  if (a == std::string_view::npos) return {};
  const std::size_t start = a + from.size();
  const std::size_t b = text.find(to, start);
  if (b == std::string_view::npos) return {};
  return text.substr(start, b - start);
}

}  // namespace

std::string MockTextBackend::complete_text(const std::string& prompt) {
  if (prompt.rfind("You will be given:", 0) == 0) {
    // CoT generation: echo the provided progress and restate the narrations
    // in the marker structure the builtin ledger parser understands.
    const std::string task{util::trim(line_after(prompt, "Task:  \n"))};
    const std::string_view progress_line = util::trim(line_after(prompt, "\nProgress:\n"));
    const int progress = std::atoi(std::string(progress_line).c_str());
    const auto completed = util::split_nonempty_lines(
        section_between(prompt, "Completed Narrations:\n", "\n\nUncompleted Narrations:"));
    const auto uncompleted = util::split_nonempty_lines(
        section_between(prompt, "Uncompleted Narrations:\n", "\n\nProgress:"));
    const std::string body =
        render_marker_cot(util::to_lower(task), progress, completed, {}, uncompleted);
    return "<think>\n" + body + "\n</think>\n<answer>\n" + std::to_string(progress) +
           "\n</answer>";
  }

  if (prompt.rfind("You are given a task description", 0) == 0) {
    // Distractor generation: pick objects deterministically from the task.
    const std::size_t turn_at = prompt.rfind("Original task description: ");
    const std::string turn_tail = prompt.substr(turn_at);
    const std::string task{util::trim(line_after(turn_tail, "description: "))};
    const std::size_t objects_at = prompt.rfind("- Objects: ");
    const std::string objects_tail = prompt.substr(objects_at);
    const std::string_view objects_line = line_after(objects_tail, "- Objects: ");
    std::vector<std::string> objects;
    std::size_t pos = 0;
    while (pos <= objects_line.size()) {
      const std::size_t comma = objects_line.find(',', pos);
      const std::string_view item = util::trim(
          comma == std::string_view::npos ? objects_line.substr(pos)
                                          : objects_line.substr(pos, comma - pos));
      if (!item.empty()) objects.emplace_back(item);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (objects.empty()) return "";
    const std::uint64_t h = util::fnv1a(task);
    const std::string& a = objects[h % objects.size()];
    const std::string& b = objects[(h / 1315423911ULL) % objects.size()];
    return "Put the " + a + " next to the " + b + ".";
  }

  if (prompt.rfind("Extract the step status", 0) == 0) {
    const std::size_t at = prompt.find("\nReasoning:\n");
    const StepLedger ledger =
        parse_step_ledger(at == std::string::npos ? std::string_view(prompt)
                                                  : std::string_view(prompt).substr(at + 12));
    json j = {{"completed", ledger.completed},
              {"in_progress", ledger.in_progress},
              {"pending", ledger.pending}};
    return j.dump();
  }

  return "";
}

// ---------------------------------------------------------------------------
// Remote chat-completions wire
// ---------------------------------------------------------------------------

namespace {

TransportError map_httplib_error(httplib::Error err) {
  using Category = TransportError::Category;
  switch (err) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
    case httplib::Error::Write:
      return TransportError(Category::timeout, "request timed out");
    default:
      return TransportError(Category::connection, "connection failed: " + httplib::to_string(err));
  }
}

httplib::Headers auth_headers(const RemoteBackendConfig& cfg) {
  httplib::Headers headers;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  return headers;
}

void apply_timeouts(httplib::Client& cli, double seconds) {
  const auto whole = static_cast<time_t>(seconds);
  const auto usec = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
  cli.set_connection_timeout(whole, usec);
  cli.set_read_timeout(whole, usec);
  cli.set_write_timeout(whole, usec);
}

std::string chat_completion(const RemoteBackendConfig& cfg, json messages) {
  httplib::Client cli(cfg.base_url);
  apply_timeouts(cli, cfg.timeout_seconds);
  const json body = {{"model", cfg.model}, {"messages", std::move(messages)}, {"temperature", 0}};
  auto res = cli.Post(cfg.chat_path, auth_headers(cfg), body.dump(), "application/json");
  if (!res) throw map_httplib_error(res.error());
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(TransportError::Category::http_status,
                         "backend returned status " + std::to_string(res->status));
  }
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
    throw TransportError(TransportError::Category::protocol, "malformed completion reply");
  }
  const json& message = reply["choices"][0].value("message", json::object());
  const json& content = message.contains("content") ? message["content"] : json();
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const json& part : content) {
      if (part.is_object() && part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
  }
  throw TransportError(TransportError::Category::protocol, "completion reply has no content");
}

// data: URL for a frame; URI payloads are fetched (http/https) or read from
// disk, then base64-encoded.
std::string image_data_url(const Frame& frame, const RemoteBackendConfig& cfg) {
  if (frame.payload.kind == ImagePayload::Kind::base64) {
    return "data:" + frame.media_type + ";base64," + frame.payload.value;
  }
  const std::string& uri = frame.payload.value;
  if (uri.rfind("http://", 0) == 0 || uri.rfind("https://", 0) == 0) {
    const std::size_t scheme_end = uri.find("://") + 3;
    const std::size_t path_at = uri.find('/', scheme_end);
    const std::string host = uri.substr(0, path_at);
    const std::string path = path_at == std::string::npos ? "/" : uri.substr(path_at);
    httplib::Client cli(host);
    apply_timeouts(cli, cfg.timeout_seconds);
    auto res = cli.Get(path);
    if (!res) throw map_httplib_error(res.error());
    if (res->status < 200 || res->status >= 300) {
      throw TransportError(TransportError::Category::http_status,
                           "frame fetch returned status " + std::to_string(res->status));
    }
    return "data:" + frame.media_type + ";base64," + util::base64_encode(res->body);
  }
  std::ifstream in(uri, std::ios::binary);
  if (!in) {
    throw TransportError(TransportError::Category::protocol, "unreadable frame uri: " + uri);
  }
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return "data:" + frame.media_type + ";base64," + util::base64_encode(bytes.str());
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteBackendConfig cfg) : cfg_(std::move(cfg)) {}

std::string RemoteBackend::complete(const BackendRequest& req) {
  const auto parts = prompts::estimation_user_parts(req.history_cot, req.question);
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", parts.before_images}});
  for (const Frame& frame : req.frames) {
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", image_data_url(frame, cfg_)}}}});
  }
  content.push_back({{"type", "text"}, {"text", parts.after_images}});
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", std::move(content)}});
  return chat_completion(cfg_, std::move(messages));
}

bool RemoteBackend::healthy() {
  httplib::Client cli(cfg_.base_url);
  apply_timeouts(cli, std::min(cfg_.timeout_seconds, 5.0));
  auto res = cli.Get(cfg_.health_path, auth_headers(cfg_));
  return res && res->status >= 200 && res->status < 300;
}

RemoteTextBackend::RemoteTextBackend(RemoteBackendConfig cfg) : cfg_(std::move(cfg)) {}

std::string RemoteTextBackend::complete_text(const std::string& prompt) {
  json messages = json::array();
  messages.push_back({{"role", "user"}, {"content", prompt}});
  return chat_completion(cfg_, std::move(messages));
}

}  // namespace promon
