#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promon/core.hpp"

namespace promon {

/// Reward hyperparameters. delta1 is the error tolerance of the accuracy
/// reward, delta2 scales the turn-over-turn improvement, alpha and beta
/// weight the improvement and finish terms. The defaults are implementation
/// choices; every report records the values actually used.
struct RewardConfig {
  double delta1 = 20.0;
  double delta2 = 20.0;
  double alpha = 0.5;
  double beta = 0.5;
  double imp_clip_lo = -1.0;
  double imp_clip_hi = 0.8;
};

std::vector<std::string> validate(const RewardConfig& cfg);

struct RewardBreakdown {
  double r_fmt = 0.0;      // {0, 1}
  double r_bin = 0.0;      // {0, 0.25, 1.0}
  double r_mae = 0.0;      // [0, 1]
  double r_imp = 0.0;      // [imp_clip_lo, imp_clip_hi]
  double r_fin = 0.0;      // {0, 1}
  double r_overall = 0.0;  // r_fmt * (r_bin * r_mae + alpha * r_imp + beta * r_fin)
};

/// 1 iff raw is exactly one <think> block then one <answer> block whose
/// content is an integer in [0, 100]; surrounding whitespace allowed,
/// nothing else. Out-of-range integers fail rather than being clamped.
double format_reward(std::string_view raw);

/// 1.0 for the correct bin, 0.25 for an existing adjacent bin, else 0.
double bin_reward(Progress p, const GroundTruthTurn& gt);

/// max(1 - |p - p_gt| / delta1, 0).
double mae_reward(Progress p, Progress p_gt, const RewardConfig& cfg);

/// (previous_error - current_error) / delta2, before clamping.
double improvement_reward_unclamped(double previous_error, double current_error,
                                    const RewardConfig& cfg);

/// Error reduction versus the previous turn, clamped to the asymmetric range
/// [imp_clip_lo, imp_clip_hi]. First turn (no previous values) scores 0.
/// p_prev and gt_prev must be jointly present or jointly absent.
double improvement_reward(Progress p_t, std::optional<Progress> p_prev, Progress gt_t,
                          std::optional<Progress> gt_prev, const RewardConfig& cfg);

/// 1 iff prediction and ground truth agree on task completion. Predictions
/// compare to 100 exactly (they are parsed integers); ground-truth reals
/// compare within tolerance.
double finish_reward(Progress p, Progress p_gt);

/// All components plus the combined reward. r_fmt gates the total: when the
/// raw output is malformed the overall reward is 0 but the remaining
/// components are still reported for diagnostics.
RewardBreakdown overall_reward(std::optional<std::string_view> raw_output, Progress p_t,
                               std::optional<Progress> p_prev, const GroundTruthTurn& gt,
                               std::optional<Progress> gt_prev, const RewardConfig& cfg);

/// Variant for callers that already know the format outcome (e.g. a session
/// that accepted or rejected an output upstream).
RewardBreakdown overall_reward_with_format(double r_fmt, Progress p_t,
                                           std::optional<Progress> p_prev,
                                           const GroundTruthTurn& gt,
                                           std::optional<Progress> gt_prev,
                                           const RewardConfig& cfg);

}  // namespace promon
