#include "promon/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "promon/output_format.hpp"

namespace promon {

std::vector<std::string> validate(const RewardConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.delta1 > 0.0)) out.push_back("delta1: must be positive");
  if (!(cfg.delta2 > 0.0)) out.push_back("delta2: must be positive");
  if (cfg.alpha < 0.0) out.push_back("alpha: must be non-negative");
  if (cfg.beta < 0.0) out.push_back("beta: must be non-negative");
  if (!(cfg.imp_clip_lo < 0.0)) out.push_back("imp_clip_lo: must be negative");
  if (!(cfg.imp_clip_hi > 0.0)) out.push_back("imp_clip_hi: must be positive");
  return out;
}

double format_reward(std::string_view raw) {
  return parse_ok(parse_model_output(raw)) ? 1.0 : 0.0;
}

double bin_reward(Progress p, const GroundTruthTurn& gt) {
  const int b = bin_index(p, gt.n_gt);
  if (b == gt.m_gt) return 1.0;
  // bin_index never leaves [0, n], so adjacency against out-of-range bins
  // cannot match.
  if (b == gt.m_gt - 1 || b == gt.m_gt + 1) return 0.25;
  return 0.0;
}

double mae_reward(Progress p, Progress p_gt, const RewardConfig& cfg) {
  return std::max(1.0 - std::abs(p.value - p_gt.value) / cfg.delta1, 0.0);
}

double improvement_reward_unclamped(double previous_error, double current_error,
                                    const RewardConfig& cfg) {
  return (previous_error - current_error) / cfg.delta2;
}

double improvement_reward(Progress p_t, std::optional<Progress> p_prev, Progress gt_t,
                          std::optional<Progress> gt_prev, const RewardConfig& cfg) {
  if (p_prev.has_value() != gt_prev.has_value()) {
    throw std::invalid_argument("improvement_reward: previous values must be jointly present");
  }
  if (!p_prev) return 0.0;
  const double previous_error = std::abs(p_prev->value - gt_prev->value);
  const double current_error = std::abs(p_t.value - gt_t.value);
  return std::clamp(improvement_reward_unclamped(previous_error, current_error, cfg),
                    cfg.imp_clip_lo, cfg.imp_clip_hi);
}

double finish_reward(Progress p, Progress p_gt) {
  const bool pred_done = prediction_complete(p.value);
  const bool gt_done = label_complete(p_gt.value);
  return pred_done == gt_done ? 1.0 : 0.0;
}

RewardBreakdown overall_reward_with_format(double r_fmt, Progress p_t,
                                           std::optional<Progress> p_prev,
                                           const GroundTruthTurn& gt,
                                           std::optional<Progress> gt_prev,
                                           const RewardConfig& cfg) {
  RewardBreakdown rb;
  rb.r_fmt = r_fmt;
  rb.r_bin = bin_reward(p_t, gt);
  rb.r_mae = mae_reward(p_t, gt.p_gt, cfg);
  rb.r_imp = improvement_reward(p_t, p_prev, gt.p_gt, gt_prev, cfg);
  rb.r_fin = finish_reward(p_t, gt.p_gt);
  rb.r_overall = rb.r_fmt * (rb.r_bin * rb.r_mae + cfg.alpha * rb.r_imp + cfg.beta * rb.r_fin);
  return rb;
}

RewardBreakdown overall_reward(std::optional<std::string_view> raw_output, Progress p_t,
                               std::optional<Progress> p_prev, const GroundTruthTurn& gt,
                               std::optional<Progress> gt_prev, const RewardConfig& cfg) {
  const double fmt = raw_output ? format_reward(*raw_output) : 1.0;
  return overall_reward_with_format(fmt, p_t, p_prev, gt, gt_prev, cfg);
}

}  // namespace promon
