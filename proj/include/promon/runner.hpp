#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "promon/backend.hpp"
#include "promon/engine.hpp"
#include "promon/json_io.hpp"
#include "promon/metrics.hpp"

namespace promon {

struct ReplayOptions {
  SegmentationConfig segmentation;
  RewardConfig reward;
  MockOracleConfig mock;
  int retry_budget = 2;
  std::filesystem::path out_dir;  // empty: compute only, write nothing
};

struct ReplayResult {
  BenchmarkReport report;
  std::vector<std::pair<std::string, BenchmarkReport>> per_trajectory;
  std::size_t degraded_turns = 0;
  std::size_t sessions = 0;
};

/// End-to-end oracle run: one session per annotation over synthesized frame
/// streams, ground truth supplied each turn, transcripts and evaluation logs
/// written under out_dir (transcripts/<traj>.jsonl, predictions.jsonl,
/// ground_truth.jsonl, report.json).
ReplayResult run_replay(const std::vector<TaskAnnotation>& annotations,
                        const ReplayOptions& options);

struct EvalResult {
  BenchmarkReport report;
  std::vector<std::pair<std::string, BenchmarkReport>> per_trajectory;
};

/// Joins prediction rows against ground-truth rows on (traj_id, turn) and
/// aggregates. Every prediction must have ground truth; unmatched ground
/// truth is ignored.
EvalResult evaluate_logs(const std::vector<io::PredictionRow>& predictions,
                         const std::vector<io::GroundTruthRow>& ground_truth);

}  // namespace promon
