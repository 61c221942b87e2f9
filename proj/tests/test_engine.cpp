#include <deque>

#include "doctest.h"

#include "promon/engine.hpp"
#include "promon/prompts.hpp"
#include "promon/json_io.hpp"
#include "test_support.hpp"

using namespace promon;

namespace {

// Backend with a scripted reply queue; records every request it sees.
class ScriptedBackend : public Backend {
 public:
  struct Reply {
    bool transport_fail = false;
    std::string text;
  };

  explicit ScriptedBackend(std::deque<Reply> replies) : replies_(std::move(replies)) {}

  std::string complete(const BackendRequest& req) override {
    requests.push_back(req);
    if (replies_.empty()) return last_;
    Reply r = replies_.front();
    replies_.pop_front();
    if (r.transport_fail) {
      throw TransportError(TransportError::Category::connection, "scripted failure");
    }
    last_ = r.text;
    return r.text;
  }
  bool healthy() override { return true; }
  std::string name() const override { return "scripted"; }

  std::vector<BackendRequest> requests;

 private:
  std::deque<Reply> replies_;
  std::string last_;
};

std::string valid_reply(int progress, const std::string& cot = "Completed: a. Remaining: b.") {
  return "<think>" + cot + "</think><answer>" + std::to_string(progress) + "</answer>";
}

EngineConfig default_config() {
  return EngineConfig{SegmentationConfig::alfred(), RewardConfig{}, 2};
}

Snippet snippet_at(int index, double t_end, int k = 4) {
  Snippet s;
  s.index = index;
  s.t_end = t_end;
  s.t_begin = t_end - 4.0;
  for (int i = 0; i < k; ++i) {
    s.frames.push_back({s.t_begin + static_cast<double>(i) + 1.0,
                        {ImagePayload::Kind::uri, "frame"},
                        "image/jpeg"});
  }
  return s;
}

}  // namespace

TEST_CASE("build_prompt: first-turn history sentinel and pass-through") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {false, valid_reply(10, "prior reasoning")}});
  Session session("s", "make coffee", backend, default_config());

  const BackendRequest first = session.build_prompt(snippet_at(1, 4.0));
  CHECK(first.history_cot == "None");
  CHECK(first.question == "make coffee");
  CHECK(first.frames.size() == 4);
  CHECK(first.system_prompt == prompts::estimation_system_text());

  session.run_turn(snippet_at(1, 4.0));
  const BackendRequest second = session.build_prompt(snippet_at(2, 8.0));
  CHECK(second.history_cot == "prior reasoning");
}

TEST_CASE("build_prompt rejects a wrong frame count") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{});
  Session session("s", "t", backend, default_config());
  CHECK_THROWS_AS(session.build_prompt(snippet_at(1, 4.0, 3)), std::invalid_argument);
}

TEST_CASE("oracle-backed turns echo rounded labels and finish at 100") {
  const TaskAnnotation a = testkit::four_step_annotation();
  auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, MockOracleConfig{});
  Session session("s", a.task, backend, default_config());

  const auto frames = testkit::uniform_manifest(40.0, 1.0);
  const auto snippets = segment_stream(frames, SegmentationConfig::alfred());
  for (const Snippet& s : snippets) {
    GroundTruthTurn gt{compute_progress_label(a, s.last_timestamp()),
                       static_cast<int>(a.steps.size()),
                       completed_steps_at(a, s.last_timestamp())};
    const TurnRecord rec = session.run_turn(s, gt);
    CHECK(rec.parse_ok);
    CHECK(rec.progress ==
          static_cast<double>(std::lround(compute_progress_label(a, s.last_timestamp()).value)));
    REQUIRE(rec.rewards.has_value());
    CHECK(rec.rewards->r_fmt == 1.0);
    CHECK(rec.rewards->r_bin == 1.0);
  }
  CHECK(session.state() == SessionState::finished);
  CHECK(session.last_progress()->value == 100.0);
  CHECK_THROWS_AS(session.run_turn(snippet_at(11, 44.0)), SessionError);
}

TEST_CASE("rounding of half-integer labels goes up") {
  const TaskAnnotation a = testkit::four_step_annotation();
  auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, MockOracleConfig{});
  Session session("s", a.task, backend, default_config());
  const TurnRecord rec = session.run_turn(snippet_at(1, 25.0));  // label 62.5
  CHECK(rec.progress == 63.0);
}

TEST_CASE("snippet index must advance the session turn") {
  auto backend = std::make_shared<ScriptedBackend>(
      std::deque<ScriptedBackend::Reply>{{false, valid_reply(1)}});
  Session session("s", "t", backend, default_config());
  CHECK_THROWS_AS(session.run_turn(snippet_at(2, 8.0)), SessionError);
}

TEST_CASE("retry contract: garbage twice then valid") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {false, "garbage"}, {false, "more garbage"}, {false, valid_reply(30)}});
  Session session("s", "t", backend, default_config());
  const TurnRecord rec = session.run_turn(snippet_at(1, 4.0));
  CHECK(rec.parse_ok);
  CHECK(rec.retries_used == 2);
  CHECK(rec.progress == 30.0);
  CHECK(session.state() == SessionState::active);
}

TEST_CASE("retry exhaustion carries progress forward and degrades the session") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {false, valid_reply(42)},
      {false, "bad"}, {false, "bad"}, {false, "bad"},
      {false, valid_reply(50)}});
  Session session("s", "t", backend, default_config());

  CHECK(session.run_turn(snippet_at(1, 4.0)).progress == 42.0);

  const TurnRecord degraded = session.run_turn(snippet_at(2, 8.0));
  CHECK_FALSE(degraded.parse_ok);
  CHECK(degraded.retries_used == 2);
  CHECK(degraded.progress == 42.0);  // carried forward
  CHECK(degraded.cot_text == session.history()[0].cot_text);
  CHECK(session.state() == SessionState::degraded_active);

  const TurnRecord recovered = session.run_turn(snippet_at(3, 12.0));
  CHECK(recovered.parse_ok);
  CHECK(recovered.progress == 50.0);
  CHECK(session.state() == SessionState::active);
}

TEST_CASE("first-turn exhaustion reports zero progress") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {false, "bad"}, {false, "bad"}, {false, "bad"}});
  Session session("s", "t", backend, default_config());
  const TurnRecord rec = session.run_turn(snippet_at(1, 4.0));
  CHECK_FALSE(rec.parse_ok);
  CHECK(rec.progress == 0.0);
  REQUIRE(!rec.rewards.has_value());
}

TEST_CASE("degraded turns score a zero format gate when ground truth rides along") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {false, "bad"}, {false, "bad"}, {false, "bad"}});
  Session session("s", "t", backend, default_config());
  const GroundTruthTurn gt{Progress{10.0}, 4, 0};
  const TurnRecord rec = session.run_turn(snippet_at(1, 4.0), gt);
  REQUIRE(rec.rewards.has_value());
  CHECK(rec.rewards->r_fmt == 0.0);
  CHECK(rec.rewards->r_overall == 0.0);
}

TEST_CASE("transport failure aborts the turn without advancing the session") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {true, ""}, {true, ""}, {true, ""}, {false, valid_reply(12)}});
  Session session("s", "t", backend, default_config());
  CHECK_THROWS_AS(session.run_turn(snippet_at(1, 4.0)), TransportError);
  CHECK(session.turn() == 0);
  CHECK(session.history().empty());
  // idempotent resubmission succeeds once the backend recovers
  const TurnRecord rec = session.run_turn(snippet_at(1, 4.0));
  CHECK(rec.turn == 1);
  CHECK(rec.progress == 12.0);
}

TEST_CASE("a transport blip inside the retry budget is absorbed") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{
      {true, ""}, {false, valid_reply(5)}});
  Session session("s", "t", backend, default_config());
  const TurnRecord rec = session.run_turn(snippet_at(1, 4.0));
  CHECK(rec.parse_ok);
  CHECK(rec.retries_used == 1);
}

TEST_CASE("mock oracle fault injection: malformed_rate 1.0 always degrades") {
  const TaskAnnotation a = testkit::four_step_annotation();
  MockOracleConfig cfg;
  cfg.malformed_rate = 1.0;
  auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, cfg);
  Session session("s", a.task, backend, default_config());
  const TurnRecord rec = session.run_turn(snippet_at(1, 4.0));
  CHECK_FALSE(rec.parse_ok);
  CHECK(rec.progress == 0.0);
}

TEST_CASE("session determinism: identical reruns produce identical records") {
  const TaskAnnotation a = testkit::four_step_annotation();
  const auto frames = testkit::uniform_manifest(40.0, 1.0);
  const auto snippets = segment_stream(frames, SegmentationConfig::alfred());

  auto run_once = [&] {
    auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, MockOracleConfig{});
    Session session("s", a.task, backend, default_config());
    std::string serialized;
    for (const Snippet& s : snippets) {
      GroundTruthTurn gt{compute_progress_label(a, s.last_timestamp()),
                         static_cast<int>(a.steps.size()),
                         completed_steps_at(a, s.last_timestamp())};
      serialized += io::turn_record_to_json(session.run_turn(s, gt)).dump();
      serialized += '\n';
      if (session.state() == SessionState::finished) break;
    }
    return serialized;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("CoT threading: each request carries the previous turn's reasoning") {
  const TaskAnnotation a = testkit::four_step_annotation();
  auto oracle = std::make_shared<MockOracleBackend>(a, std::nullopt, MockOracleConfig{});
  struct RecordingOracle : Backend {
    explicit RecordingOracle(std::shared_ptr<Backend> inner) : inner(std::move(inner)) {}
    std::string complete(const BackendRequest& req) override {
      requests.push_back(req);
      return inner->complete(req);
    }
    bool healthy() override { return inner->healthy(); }
    std::string name() const override { return inner->name(); }
    std::shared_ptr<Backend> inner;
    std::vector<BackendRequest> requests;
  };
  auto recorder = std::make_shared<RecordingOracle>(oracle);
  Session session("s", a.task, recorder, default_config());
  TurnRecord r1 = session.run_turn(snippet_at(1, 4.0));
  TurnRecord r2 = session.run_turn(snippet_at(2, 8.0));
  session.run_turn(snippet_at(3, 12.0));
  REQUIRE(recorder->requests.size() == 3);
  CHECK(recorder->requests[0].history_cot == "None");
  CHECK(recorder->requests[1].history_cot == r1.cot_text);
  CHECK(recorder->requests[2].history_cot == r2.cot_text);
}

TEST_CASE("close() finishes the stream") {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Reply>{});
  Session session("s", "t", backend, default_config());
  session.close();
  CHECK(session.state() == SessionState::finished);
  CHECK_THROWS_AS(session.run_turn(snippet_at(1, 4.0)), SessionError);
}

TEST_CASE("extract_step_status: builtin marker path") {
  const TaskAnnotation a = testkit::four_step_annotation();
  auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, MockOracleConfig{});
  Session session("s", a.task, backend, default_config());
  // end of step 2 with a two-step gap view: 2 completed, 1 in progress, 1 pending
  session.run_turn(snippet_at(1, 20.0));
  const StepLedger ledger = extract_step_status(session.cot());
  CHECK(ledger.completed.size() == 2);
  CHECK(ledger.in_progress.size() == 1);
  CHECK(ledger.pending.size() == 1);
}

TEST_CASE("extract_step_status: oracle CoT for a three-step task in a gap") {
  TaskAnnotation a;
  a.task = "three step task";
  a.steps = {{"first", 0.0, 10.0}, {"second", 10.0, 20.0}, {"third", 25.0, 30.0}};
  auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, MockOracleConfig{});
  Session session("s", a.task, backend, default_config());
  const TurnRecord rec = session.run_turn(snippet_at(1, 20.0));  // label 66.67 -> 67
  CHECK(rec.progress == 67.0);
  const StepLedger ledger = extract_step_status(session.cot());
  CHECK(ledger.completed.size() == 2);
  CHECK(ledger.in_progress.empty());
  CHECK(ledger.pending.size() == 1);
}

TEST_CASE("extract_step_status: empty CoT is a precondition violation") {
  CotState cot;
  CHECK_THROWS_AS(extract_step_status(cot), std::invalid_argument);
}

TEST_CASE("extract_step_status: backend JSON path") {
  CotState cot;
  cot.text = "free-form reasoning";
  FunctionTextBackend good([](const std::string& prompt) {
    CHECK(prompt.find("free-form reasoning") != std::string::npos);
    return std::string(R"({"completed": ["a"], "in_progress": [], "pending": ["b", "c"]})");
  });
  const StepLedger ledger = extract_step_status(cot, &good);
  CHECK(ledger.completed == std::vector<std::string>{"a"});
  CHECK(ledger.pending == std::vector<std::string>{"b", "c"});
  CHECK_FALSE(ledger.low_confidence);

  FunctionTextBackend bad([](const std::string&) { return std::string("not json"); });
  const StepLedger empty = extract_step_status(cot, &bad);
  CHECK(empty.empty());
  CHECK(empty.low_confidence);

  // The deterministic text backend answers the extraction prompt too.
  MockTextBackend mock;
  CotState marker;
  marker.text = "Completed: a. Remaining: b.";
  const StepLedger via_mock = extract_step_status(marker, &mock);
  CHECK(via_mock.completed == std::vector<std::string>{"a"});
  CHECK(via_mock.pending == std::vector<std::string>{"b"});
}

TEST_CASE("render_full_prompt matches the template with the request's slots") {
  BackendRequest req;
  req.system_prompt = prompts::estimation_system_text();
  req.history_cot = "None";
  req.question = "task";
  req.frames = snippet_at(1, 4.0).frames;
  CHECK(render_full_prompt(req) == prompts::render_estimation_prompt("None", 4, "task"));
}
