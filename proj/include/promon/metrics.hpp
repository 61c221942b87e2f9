#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "promon/core.hpp"

namespace promon {

/// Inputs for evaluating one turn. The previous-turn values are jointly
/// present or jointly absent; absent means first turn.
struct TurnEvaluation {
  Progress p;
  GroundTruthTurn gt;
  std::optional<Progress> p_prev;
  std::optional<Progress> gt_prev;
};

struct EvalSettings {
  double completion_tolerance = kProgressTolerance;
  std::string pooling = "global";
};

/// Benchmark aggregates. p_mae, delta_p_mae, and bin are means over all turns
/// pooled across trajectories (longer trajectories weigh more); acc is the
/// balanced accuracy of the completion prediction over the pooled turns.
struct BenchmarkReport {
  double p_mae = 0.0;
  double delta_p_mae = 0.0;
  double bin = 0.0;
  double acc = 0.0;
  std::size_t turn_count = 0;
  std::size_t trajectory_count = 0;
  EvalSettings settings;
};

/// |p - p_gt|.
double p_mae_metric(const TurnEvaluation& e);

/// |(p - p_prev) - (p_gt - gt_prev)|, with absent previous values taken as 0.
double delta_p_mae_metric(const TurnEvaluation& e);

/// 1 iff the prediction falls in the correct bin.
double bin_metric(const TurnEvaluation& e);

/// Balanced accuracy of completion prediction: the two classes are
/// {p_gt == 100, p_gt != 100}; per-turn correctness is agreement on the
/// class; the aggregate is the mean of the two class accuracies. When one
/// class is empty, falls back to the raw mean. Throws on empty input.
double acc_metric(const std::vector<std::pair<double, double>>& turns);

/// Pools every turn of every trajectory and averages. Throws when there are
/// no turns at all.
BenchmarkReport aggregate_report(const std::vector<std::vector<TurnEvaluation>>& trajectories);

}  // namespace promon
