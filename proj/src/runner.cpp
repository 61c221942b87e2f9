#include "promon/runner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "promon/dataset.hpp"
#include "promon/util.hpp"

namespace promon {

ReplayResult run_replay(const std::vector<TaskAnnotation>& annotations,
                        const ReplayOptions& options) {
  if (annotations.empty()) throw std::invalid_argument("replay: no annotations");

  const bool write = !options.out_dir.empty();
  if (write) std::filesystem::create_directories(options.out_dir / "transcripts");

  std::ofstream predictions_out;
  std::ofstream ground_truth_out;
  if (write) {
    predictions_out.open(options.out_dir / "predictions.jsonl", std::ios::trunc);
    ground_truth_out.open(options.out_dir / "ground_truth.jsonl", std::ios::trunc);
  }

  ReplayResult result;
  std::vector<std::vector<TurnEvaluation>> all_evals;

  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const TaskAnnotation& a = annotations[i];
    const std::string traj_id = trajectory_id(a, i + 1);
    const int n = static_cast<int>(a.steps.size());

    MockOracleConfig mock = options.mock;
    mock.seed = options.mock.seed + i;
    auto backend = std::make_shared<MockOracleBackend>(a, std::nullopt, mock);
    Session session(traj_id, a.task,
                    std::static_pointer_cast<Backend>(backend),
                    EngineConfig{options.segmentation, options.reward, options.retry_budget});

    const auto frames = synthesize_frames(a, options.segmentation.fps);
    const auto snippets = segment_stream(frames, options.segmentation);

    std::ofstream transcript;
    if (write) {
      transcript.open(options.out_dir / "transcripts" / (traj_id + ".jsonl"), std::ios::trunc);
    }

    std::vector<TurnEvaluation> evals;
    std::optional<Progress> prev_pred;
    std::optional<Progress> prev_gt;
    for (const Snippet& snippet : snippets) {
      const double t = snippet.last_timestamp();
      GroundTruthTurn gt;
      gt.p_gt = compute_progress_label(a, t);
      gt.n_gt = n;
      gt.m_gt = completed_steps_at(a, t);

      const TurnRecord rec = session.run_turn(snippet, gt);
      result.degraded_turns += rec.parse_ok ? 0 : 1;

      TurnEvaluation e;
      e.p = Progress{rec.progress};
      e.gt = gt;
      e.p_prev = prev_pred;
      e.gt_prev = prev_gt;
      evals.push_back(e);
      prev_pred = Progress{rec.progress};
      prev_gt = gt.p_gt;

      if (write) {
        transcript << io::turn_record_to_json(rec).dump() << '\n';
        predictions_out << io::prediction_row_to_json({traj_id, rec.turn, rec.progress}).dump()
                        << '\n';
        ground_truth_out
            << io::ground_truth_row_to_json({traj_id, rec.turn, gt.p_gt.value, n, gt.m_gt}).dump()
            << '\n';
      }
      if (session.state() == SessionState::finished) break;
    }
    session.close();
    ++result.sessions;
    result.per_trajectory.emplace_back(traj_id, aggregate_report({evals}));
    all_evals.push_back(std::move(evals));
  }

  result.report = aggregate_report(all_evals);
  if (write) {
    io::write_text_file((options.out_dir / "report.json").string(),
                        io::report_to_json(result.report, result.per_trajectory).dump(2) + "\n");
  }
  return result;
}

EvalResult evaluate_logs(const std::vector<io::PredictionRow>& predictions,
                         const std::vector<io::GroundTruthRow>& ground_truth) {
  if (predictions.empty()) throw std::invalid_argument("eval: no predictions");

  std::map<std::string, std::map<int, io::GroundTruthRow>> gt_index;
  for (const auto& row : ground_truth) gt_index[row.traj_id][row.turn] = row;

  // Group predictions by trajectory, preserving first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::map<int, double>> pred_index;
  for (const auto& row : predictions) {
    if (pred_index.find(row.traj_id) == pred_index.end()) order.push_back(row.traj_id);
    auto& turns = pred_index[row.traj_id];
    if (!turns.emplace(row.turn, row.progress).second) {
      throw std::runtime_error("duplicate prediction for " + row.traj_id + " turn " +
                               std::to_string(row.turn));
    }
  }

  EvalResult result;
  std::vector<std::vector<TurnEvaluation>> all_evals;
  for (const std::string& traj_id : order) {
    const auto gt_turns = gt_index.find(traj_id);
    std::vector<TurnEvaluation> evals;
    std::optional<Progress> prev_pred;
    std::optional<Progress> prev_gt;
    for (const auto& [turn, progress] : pred_index[traj_id]) {
      if (gt_turns == gt_index.end() || gt_turns->second.find(turn) == gt_turns->second.end()) {
        throw std::runtime_error("ground truth missing for " + traj_id + " turn " +
                                 std::to_string(turn));
      }
      const io::GroundTruthRow& gt_row = gt_turns->second.at(turn);
      GroundTruthTurn gt{Progress{gt_row.progress}, gt_row.n, gt_row.m};
      const auto violations = validate_ground_truth(gt);
      if (!violations.empty()) {
        throw std::runtime_error("invalid ground truth for " + traj_id + " turn " +
                                 std::to_string(turn) + ": " + util::join(violations, "; "));
      }
      TurnEvaluation e{Progress{progress}, gt, prev_pred, prev_gt};
      evals.push_back(e);
      prev_pred = Progress{progress};
      prev_gt = gt.p_gt;
    }
    result.per_trajectory.emplace_back(traj_id, aggregate_report({evals}));
    all_evals.push_back(std::move(evals));
  }
  result.report = aggregate_report(all_evals);
  return result;
}

}  // namespace promon
