#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "promon/core.hpp"
#include "promon/engine.hpp"
#include "promon/metrics.hpp"
#include "promon/rewards.hpp"

namespace promon::io {

using ordered_json = nlohmann::ordered_json;

// Annotation schema: {"task", "video_ref", "steps": [{"desc", "t_start", "t_end"}]}
TaskAnnotation annotation_from_json(const nlohmann::json& j);
ordered_json annotation_to_json(const TaskAnnotation& a);

// Frame manifest: JSON list of {"ts": number, "uri": string}
std::vector<Frame> manifest_from_json(const nlohmann::json& j);

// Labeled snippet row: {"traj_id","turn","t_begin","t_end","frames":[uri...],"progress"}
ordered_json labeled_snippet_row(const std::string& traj_id, const Snippet& s, Progress label);

ordered_json ledger_to_json(const StepLedger& ledger);
StepLedger ledger_from_json(const nlohmann::json& j);

ordered_json reward_breakdown_to_json(const RewardBreakdown& rb);
ordered_json reward_config_to_json(const RewardConfig& cfg);

// Transcript row (one accepted turn).
ordered_json turn_record_to_json(const TurnRecord& rec);

ordered_json ground_truth_to_json(const GroundTruthTurn& gt);
GroundTruthTurn ground_truth_from_json(const nlohmann::json& j);

// Evaluation logs: predictions {"traj_id","turn","progress"} and ground truth
// {"traj_id","turn","progress","n","m"}, one object per line.
struct PredictionRow {
  std::string traj_id;
  int turn = 0;
  double progress = 0.0;
};
struct GroundTruthRow {
  std::string traj_id;
  int turn = 0;
  double progress = 0.0;
  int n = 1;
  int m = 0;
};
PredictionRow prediction_row_from_json(const nlohmann::json& j);
GroundTruthRow ground_truth_row_from_json(const nlohmann::json& j);
ordered_json prediction_row_to_json(const PredictionRow& row);
ordered_json ground_truth_row_to_json(const GroundTruthRow& row);

ordered_json report_to_json(const BenchmarkReport& report,
                            const std::vector<std::pair<std::string, BenchmarkReport>>&
                                per_trajectory = {});

/// Plain-text metrics table, columns p_mae, delta_p_mae, bin, acc.
std::string report_table(const BenchmarkReport& report);

/// Reads a JSONL stream; blank lines are skipped. Rows carry their 1-based
/// line numbers; unparseable lines go to the rejects list.
struct JsonlReadResult {
  std::vector<std::pair<std::size_t, nlohmann::json>> rows;
  std::vector<std::pair<std::size_t, std::string>> rejects;
  std::size_t line_count = 0;
};
JsonlReadResult read_jsonl(std::istream& in);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace promon::io
