#include "promon/engine.hpp"

#include <utility>

#include "json.hpp"
#include "promon/prompts.hpp"

namespace promon {

const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::active: return "active";
    case SessionState::finished: return "finished";
    case SessionState::degraded_active: return "degraded-active";
  }
  return "unknown";
}

Session::Session(std::string id, std::string task, std::shared_ptr<Backend> backend,
                 EngineConfig cfg)
    : id_(std::move(id)), task_(std::move(task)), backend_(std::move(backend)),
      cfg_(std::move(cfg)) {
  if (!backend_) throw std::invalid_argument("session requires a backend");
}

BackendRequest Session::build_prompt(const Snippet& v) const {
  if (state_ == SessionState::finished) {
    throw SessionError("session is finished");
  }
  if (static_cast<int>(v.frames.size()) != cfg_.segmentation.frames_per_snippet) {
    throw std::invalid_argument(
        "snippet has " + std::to_string(v.frames.size()) + " frames, expected K=" +
        std::to_string(cfg_.segmentation.frames_per_snippet));
  }
  BackendRequest req;
  req.system_prompt = prompts::estimation_system_text();
  req.history_cot = cot_.text.empty() ? std::string(prompts::kFirstTurnHistory) : cot_.text;
  req.frames = v.frames;
  req.question = task_;
  return req;
}

TurnRecord Session::run_turn(const Snippet& v, const std::optional<GroundTruthTurn>& gt) {
  if (state_ == SessionState::finished) {
    throw SessionError("finished session accepts no further snippets");
  }
  if (v.index != turn_ + 1) {
    throw SessionError("expected snippet index " + std::to_string(turn_ + 1) + ", got " +
                       std::to_string(v.index));
  }
  const BackendRequest req = build_prompt(v);

  TurnRecord rec;
  rec.turn = turn_ + 1;
  rec.t_begin = v.t_begin;
  rec.t_end = v.t_end;

  std::optional<ParsedOutput> parsed;
  const int attempts = cfg_.retry_budget + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    rec.retries_used = attempt;
    std::string raw;
    try {
      raw = backend_->complete(req);
    } catch (const TransportError&) {
      if (attempt + 1 == attempts) throw;  // session unchanged; resubmission is safe
      continue;
    }
    auto result = parse_model_output(raw);
    if (parse_ok(result)) {
      parsed = std::get<ParsedOutput>(std::move(result));
      break;
    }
  }

  if (parsed) {
    cot_ = CotState{parsed->cot_text, parse_step_ledger(parsed->cot_text), turn_ + 1};
    rec.parse_ok = true;
    rec.progress = static_cast<double>(parsed->progress);
    state_ = SessionState::active;
  } else {
    rec.parse_ok = false;
    rec.progress = last_progress_ ? last_progress_->value : 0.0;
    state_ = SessionState::degraded_active;
  }
  rec.cot_text = cot_.text;
  rec.step_status = cot_.ledger;

  if (gt) {
    // The improvement term needs jointly-present previous values: only turns
    // whose predecessor also carried ground truth get a non-trivial history.
    std::optional<Progress> p_prev;
    std::optional<Progress> gt_prev;
    if (turn_ > 0 && last_gt_ && last_progress_) {
      p_prev = last_progress_;
      gt_prev = last_gt_->p_gt;
    }
    rec.rewards = overall_reward_with_format(rec.parse_ok ? 1.0 : 0.0, Progress{rec.progress},
                                             p_prev, *gt, gt_prev, cfg_.reward);
  }

  ++turn_;
  last_progress_ = Progress{rec.progress};
  last_gt_ = gt;
  if (prediction_complete(rec.progress)) state_ = SessionState::finished;
  history_.push_back(rec);
  return rec;
}

void Session::close() { state_ = SessionState::finished; }

StepLedger extract_step_status(const CotState& cot, TextBackend* backend) {
  if (cot.text.empty()) throw std::invalid_argument("extract_step_status: empty CoT");
  if (backend == nullptr) {
    return parse_step_ledger(cot.text);
  }
  const std::string reply = backend->complete_text(prompts::render_step_status_prompt(cot.text));
  const std::size_t open = reply.find('{');
  const std::size_t close = reply.rfind('}');
  StepLedger ledger;
  if (open == std::string::npos || close == std::string::npos || close < open) {
    ledger.low_confidence = true;
    return ledger;
  }
  const auto j = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    ledger.low_confidence = true;
    return ledger;
  }
  auto read_list = [&j](const char* key) {
    std::vector<std::string> out;
    if (j.contains(key) && j[key].is_array()) {
      for (const auto& item : j[key]) {
        if (item.is_string()) out.push_back(item.get<std::string>());
      }
    }
    return out;
  };
  ledger.completed = read_list("completed");
  ledger.in_progress = read_list("in_progress");
  ledger.pending = read_list("pending");
  while (ledger.in_progress.size() > 1) {
    ledger.pending.insert(ledger.pending.begin(), std::move(ledger.in_progress.back()));
    ledger.in_progress.pop_back();
  }
  return ledger;
}

}  // namespace promon
