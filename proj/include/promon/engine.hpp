#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "promon/backend.hpp"
#include "promon/core.hpp"
#include "promon/labeling.hpp"
#include "promon/ledger.hpp"
#include "promon/output_format.hpp"
#include "promon/rewards.hpp"

namespace promon {

/// Precondition violations on the session surface (wrong snippet index,
/// submissions after completion).
class SessionError : public std::runtime_error {
 public:
  explicit SessionError(const std::string& message) : std::runtime_error(message) {}
};

/// The evolving reasoning state threaded between turns. text is exactly what
/// was inside the most recent think block; the ledger is best-effort derived
/// state, the text is authoritative.
struct CotState {
  std::string text;
  StepLedger ledger;
  int turn = 0;
};

enum class SessionState { active, finished, degraded_active };

const char* to_string(SessionState s);

/// One recurrent iteration. When parsing failed, progress equals the carried
/// forward previous value (0 if none).
struct TurnRecord {
  int turn = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  double progress = 0.0;
  std::string cot_text;
  bool parse_ok = false;
  int retries_used = 0;
  std::optional<RewardBreakdown> rewards;  // present when ground truth was supplied
  StepLedger step_status;
};

struct EngineConfig {
  SegmentationConfig segmentation;
  RewardConfig reward;
  int retry_budget = 2;  // extra attempts after the first, per turn
};

/// One trajectory's mutable state. Turns are strictly sequential within a
/// session; distinct sessions share nothing and may run concurrently.
class Session {
 public:
  Session(std::string id, std::string task, std::shared_ptr<Backend> backend, EngineConfig cfg);

  /// Fills the prompt template: fixed instructions, the history slot ("None"
  /// on the first turn), the K snippet frames in timestamp order, and the
  /// question carrying the task description.
  BackendRequest build_prompt(const Snippet& v) const;

  /// Runs one turn: prompt, backend call, parse. Malformed outputs are
  /// retried up to the budget; exhaustion carries the previous progress and
  /// CoT forward and degrades the session. Transport failures after retries
  /// abort the turn with the session unchanged (resubmission is idempotent).
  /// Computes rewards when ground truth is given; progress 100 finishes the
  /// session.
  TurnRecord run_turn(const Snippet& v, const std::optional<GroundTruthTurn>& gt = std::nullopt);

  /// Marks the stream closed; no further snippets are accepted.
  void close();

  const std::string& id() const { return id_; }
  const std::string& task() const { return task_; }
  const CotState& cot() const { return cot_; }
  int turn() const { return turn_; }
  SessionState state() const { return state_; }
  std::optional<Progress> last_progress() const { return last_progress_; }
  const std::vector<TurnRecord>& history() const { return history_; }
  const EngineConfig& config() const { return cfg_; }
  Backend& backend() { return *backend_; }

 private:
  std::string id_;
  std::string task_;
  std::shared_ptr<Backend> backend_;
  EngineConfig cfg_;
  CotState cot_;
  std::optional<Progress> last_progress_;
  std::optional<GroundTruthTurn> last_gt_;
  int turn_ = 0;
  SessionState state_ = SessionState::active;
  std::vector<TurnRecord> history_;
};

/// Structured step status from a CoT. The builtin path parses the marker
/// structure of the output contract; with a text backend, an extraction
/// prompt is sent and its JSON reply parsed. Unusable replies yield an empty
/// ledger flagged low-confidence.
StepLedger extract_step_status(const CotState& cot, TextBackend* backend = nullptr);

}  // namespace promon
