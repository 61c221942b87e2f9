#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "promon/core.hpp"
#include "promon/labeling.hpp"

namespace promon {

class TransportError : public std::runtime_error {
 public:
  enum class Category { timeout, connection, http_status, protocol };

  TransportError(Category category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  Category category() const { return category_; }

 private:
  Category category_;
};

const char* to_string(TransportError::Category c);

/// One inference request: the fixed instruction block, the threaded history
/// CoT ("None" on the first turn), the snippet frames in timestamp order, and
/// the question carrying the task description.
struct BackendRequest {
  std::string system_prompt;
  std::string history_cot;
  std::vector<Frame> frames;
  std::string question;
};

/// Full prompt text for the request (instruction block plus filled slots).
std::string render_full_prompt(const BackendRequest& req);

/// A vision-language completion backend. Implementations must tolerate
/// concurrent in-flight requests from different sessions.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const BackendRequest& req) = 0;
  virtual bool healthy() = 0;
  virtual std::string name() const = 0;
};

/// Fault-injection knobs for the oracle backend. noise_amplitude adds a
/// uniform offset in [-e, e] to the answer (clamped to [0, 100]);
/// malformed_rate emits an untagged reply with the given probability;
/// transport_fail_first makes the first N complete() calls throw a
/// connection error; latency_ms delays every call. All draws are seeded
/// and deterministic.
struct MockOracleConfig {
  double noise_amplitude = 0.0;
  double malformed_rate = 0.0;
  std::uint64_t seed = 0;
  int transport_fail_first = 0;
  int latency_ms = 0;
};

/// Deterministic backend that renders ground-truth-consistent output for an
/// attached annotation: a marker-structured CoT (completed / in progress /
/// remaining) and the label at the last frame timestamp, rounded to the
/// nearest integer (ties up). Used to exercise the full stack without a
/// trained model.
class MockOracleBackend : public Backend {
 public:
  MockOracleBackend(TaskAnnotation annotation, std::optional<DistractorSpec> distractor,
                    MockOracleConfig cfg);

  std::string complete(const BackendRequest& req) override;
  bool healthy() override { return true; }
  std::string name() const override { return "mock-oracle"; }

 private:
  TaskAnnotation annotation_;
  std::optional<DistractorSpec> distractor_;
  MockOracleConfig cfg_;
  std::mt19937_64 rng_;
  int calls_ = 0;
};

/// Text-only completion backend (distractor generation, CoT generation, step
/// status extraction).
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string complete_text(const std::string& prompt) = 0;
};

class FunctionTextBackend : public TextBackend {
 public:
  explicit FunctionTextBackend(std::function<std::string(const std::string&)> fn)
      : fn_(std::move(fn)) {}
  std::string complete_text(const std::string& prompt) override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

/// Deterministic text backend for dataset construction without a live model.
/// Recognizes the shipped prompt templates: distractor prompts get a
/// description derived from the task and object list; CoT-generation prompts
/// get a marker-structured reasoning block that echoes the required progress.
class MockTextBackend : public TextBackend {
 public:
  std::string complete_text(const std::string& prompt) override;
};

struct RemoteBackendConfig {
  std::string base_url;                           // e.g. http://127.0.0.1:8000
  std::string model;
  std::string api_key_env = "PROMON_API_KEY";     // credential read from env, never logged
  double timeout_seconds = 60.0;
  std::string chat_path = "/v1/chat/completions";
  std::string health_path = "/v1/models";
};

/// Chat-completions client: system role carries the instruction block, the
/// user role interleaves the history/question text with base64 image parts.
/// URI payloads are fetched (strict timeout) and encoded on the way out.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteBackendConfig cfg);

  std::string complete(const BackendRequest& req) override;
  bool healthy() override;
  std::string name() const override { return "remote"; }

 private:
  RemoteBackendConfig cfg_;
};

class RemoteTextBackend : public TextBackend {
 public:
  explicit RemoteTextBackend(RemoteBackendConfig cfg);
  std::string complete_text(const std::string& prompt) override;

 private:
  RemoteBackendConfig cfg_;
};

}  // namespace promon
