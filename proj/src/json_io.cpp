#include "promon/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace promon::io {

namespace {

double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw std::runtime_error(std::string("missing or non-numeric field: ") + key);
  }
  return j[key].get<double>();
}

int require_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw std::runtime_error(std::string("missing or non-integer field: ") + key);
  }
  return j[key].get<int>();
}

std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw std::runtime_error(std::string("missing or non-string field: ") + key);
  }
  return j[key].get<std::string>();
}

}  // namespace

TaskAnnotation annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("annotation must be a JSON object");
  TaskAnnotation a;
  a.task = require_string(j, "task");
  a.video_ref = j.value("video_ref", "");
  if (!j.contains("steps") || !j["steps"].is_array()) {
    throw std::runtime_error("missing or non-array field: steps");
  }
  for (const auto& js : j["steps"]) {
    Step s;
    s.description = require_string(js, "desc");
    s.t_start = require_number(js, "t_start");
    s.t_end = require_number(js, "t_end");
    a.steps.push_back(std::move(s));
  }
  return a;
}

ordered_json annotation_to_json(const TaskAnnotation& a) {
  ordered_json steps = ordered_json::array();
  for (const Step& s : a.steps) {
    steps.push_back({{"desc", s.description}, {"t_start", s.t_start}, {"t_end", s.t_end}});
  }
  return {{"task", a.task}, {"video_ref", a.video_ref}, {"steps", std::move(steps)}};
}

std::vector<Frame> manifest_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::runtime_error("frame manifest must be a JSON array");
  std::vector<Frame> out;
  for (const auto& jf : j) {
    Frame f;
    f.timestamp = require_number(jf, "ts");
    f.payload = {ImagePayload::Kind::uri, require_string(jf, "uri")};
    if (jf.contains("media_type")) f.media_type = jf["media_type"].get<std::string>();
    out.push_back(std::move(f));
  }
  return out;
}

ordered_json labeled_snippet_row(const std::string& traj_id, const Snippet& s, Progress label) {
  ordered_json frames = ordered_json::array();
  for (const Frame& f : s.frames) frames.push_back(f.payload.value);
  return {{"traj_id", traj_id}, {"turn", s.index},       {"t_begin", s.t_begin},
          {"t_end", s.t_end},   {"frames", std::move(frames)}, {"progress", label.value}};
}

ordered_json ledger_to_json(const StepLedger& ledger) {
  return {{"completed", ledger.completed},
          {"in_progress", ledger.in_progress},
          {"pending", ledger.pending},
          {"low_confidence", ledger.low_confidence}};
}

StepLedger ledger_from_json(const nlohmann::json& j) {
  StepLedger ledger;
  auto read = [&j](const char* key, std::vector<std::string>& out) {
    if (j.contains(key) && j[key].is_array()) {
      for (const auto& item : j[key]) out.push_back(item.get<std::string>());
    }
  };
  read("completed", ledger.completed);
  read("in_progress", ledger.in_progress);
  read("pending", ledger.pending);
  ledger.low_confidence = j.value("low_confidence", false);
  return ledger;
}

ordered_json reward_breakdown_to_json(const RewardBreakdown& rb) {
  return {{"r_fmt", rb.r_fmt}, {"r_bin", rb.r_bin}, {"r_mae", rb.r_mae},
          {"r_imp", rb.r_imp}, {"r_fin", rb.r_fin}, {"r_overall", rb.r_overall}};
}

ordered_json reward_config_to_json(const RewardConfig& cfg) {
  return {{"delta1", cfg.delta1},
          {"delta2", cfg.delta2},
          {"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"imp_clip_lo", cfg.imp_clip_lo},
          {"imp_clip_hi", cfg.imp_clip_hi}};
}

ordered_json turn_record_to_json(const TurnRecord& rec) {
  ordered_json j = {{"turn", rec.turn},
                    {"t_begin", rec.t_begin},
                    {"t_end", rec.t_end},
                    {"progress", rec.progress},
                    {"cot", rec.cot_text},
                    {"parse_ok", rec.parse_ok},
                    {"retries_used", rec.retries_used},
                    {"step_status", ledger_to_json(rec.step_status)}};
  if (rec.rewards) j["rewards"] = reward_breakdown_to_json(*rec.rewards);
  return j;
}

ordered_json ground_truth_to_json(const GroundTruthTurn& gt) {
  return {{"p_gt", gt.p_gt.value}, {"n", gt.n_gt}, {"m", gt.m_gt}};
}

GroundTruthTurn ground_truth_from_json(const nlohmann::json& j) {
  GroundTruthTurn gt;
  gt.p_gt.value = require_number(j, "p_gt");
  gt.n_gt = require_int(j, "n");
  gt.m_gt = require_int(j, "m");
  return gt;
}

PredictionRow prediction_row_from_json(const nlohmann::json& j) {
  return {require_string(j, "traj_id"), require_int(j, "turn"), require_number(j, "progress")};
}

GroundTruthRow ground_truth_row_from_json(const nlohmann::json& j) {
  return {require_string(j, "traj_id"), require_int(j, "turn"), require_number(j, "progress"),
          require_int(j, "n"), require_int(j, "m")};
}

ordered_json prediction_row_to_json(const PredictionRow& row) {
  return {{"traj_id", row.traj_id}, {"turn", row.turn}, {"progress", row.progress}};
}

ordered_json ground_truth_row_to_json(const GroundTruthRow& row) {
  return {{"traj_id", row.traj_id},
          {"turn", row.turn},
          {"progress", row.progress},
          {"n", row.n},
          {"m", row.m}};
}

ordered_json report_to_json(const BenchmarkReport& report,
                            const std::vector<std::pair<std::string, BenchmarkReport>>&
                                per_trajectory) {
  ordered_json j = {{"p_mae", report.p_mae},
                    {"delta_p_mae", report.delta_p_mae},
                    {"bin", report.bin},
                    {"acc", report.acc},
                    {"turn_count", report.turn_count},
                    {"trajectory_count", report.trajectory_count},
                    {"settings",
                     {{"completion_tolerance", report.settings.completion_tolerance},
                      {"pooling", report.settings.pooling}}}};
  if (!per_trajectory.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& [traj_id, r] : per_trajectory) {
      rows.push_back({{"traj_id", traj_id},
                      {"turn_count", r.turn_count},
                      {"p_mae", r.p_mae},
                      {"delta_p_mae", r.delta_p_mae},
                      {"bin", r.bin},
                      {"acc", r.acc}});
    }
    j["per_trajectory"] = std::move(rows);
  }
  return j;
}

std::string report_table(const BenchmarkReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-10s %-12s %-8s %-8s\n%-10.4f %-12.4f %-8.4f %-8.4f\n"
                "turns=%zu trajectories=%zu\n",
                "p_mae", "delta_p_mae", "bin", "acc", report.p_mae, report.delta_p_mae,
                report.bin, report.acc, report.turn_count, report.trajectory_count);
  return buf;
}

JsonlReadResult read_jsonl(std::istream& in) {
  JsonlReadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.line_count;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      result.rejects.emplace_back(line_no, "malformed JSON");
      continue;
    }
    result.rows.emplace_back(line_no, std::move(j));
  }
  return result;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace promon::io
