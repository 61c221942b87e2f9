#include "promon/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace promon {

double p_mae_metric(const TurnEvaluation& e) {
  return std::abs(e.p.value - e.gt.p_gt.value);
}

double delta_p_mae_metric(const TurnEvaluation& e) {
  const double p_prev = e.p_prev ? e.p_prev->value : 0.0;
  const double gt_prev = e.gt_prev ? e.gt_prev->value : 0.0;
  return std::abs((e.p.value - p_prev) - (e.gt.p_gt.value - gt_prev));
}

double bin_metric(const TurnEvaluation& e) {
  return bin_index(e.p, e.gt.n_gt) == e.gt.m_gt ? 1.0 : 0.0;
}

double acc_metric(const std::vector<std::pair<double, double>>& turns) {
  if (turns.empty()) throw std::invalid_argument("acc_metric: empty input");
  std::size_t done_total = 0, done_correct = 0;
  std::size_t open_total = 0, open_correct = 0;
  for (const auto& [p, p_gt] : turns) {
    const bool gt_done = label_complete(p_gt);
    const bool correct = prediction_complete(p) == gt_done;
    if (gt_done) {
      ++done_total;
      done_correct += correct ? 1 : 0;
    } else {
      ++open_total;
      open_correct += correct ? 1 : 0;
    }
  }
  if (done_total == 0 || open_total == 0) {
    return static_cast<double>(done_correct + open_correct) /
           static_cast<double>(done_total + open_total);
  }
  return 0.5 * (static_cast<double>(done_correct) / static_cast<double>(done_total) +
                static_cast<double>(open_correct) / static_cast<double>(open_total));
}

BenchmarkReport aggregate_report(const std::vector<std::vector<TurnEvaluation>>& trajectories) {
  BenchmarkReport report;
  double p_mae_sum = 0.0, delta_sum = 0.0, bin_sum = 0.0;
  std::vector<std::pair<double, double>> pooled;
  for (const auto& traj : trajectories) {
    for (const TurnEvaluation& e : traj) {
      p_mae_sum += p_mae_metric(e);
      delta_sum += delta_p_mae_metric(e);
      bin_sum += bin_metric(e);
      pooled.emplace_back(e.p.value, e.gt.p_gt.value);
    }
  }
  if (pooled.empty()) throw std::invalid_argument("aggregate_report: no turns");
  const double count = static_cast<double>(pooled.size());
  report.p_mae = p_mae_sum / count;
  report.delta_p_mae = delta_sum / count;
  report.bin = bin_sum / count;
  report.acc = acc_metric(pooled);
  report.turn_count = pooled.size();
  report.trajectory_count = trajectories.size();
  return report;
}

}  // namespace promon
