#include "promon/core.hpp"

#include <cmath>
#include <stdexcept>

#include "promon/util.hpp"

namespace promon {

std::vector<std::string> validate_annotation(const TaskAnnotation& a) {
  std::vector<std::string> out;
  if (util::only_whitespace(a.task)) out.push_back("task: description is empty");
  if (a.steps.empty()) out.push_back("steps: annotation must contain at least one step");
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const Step& s = a.steps[i];
    const std::string tag = "step " + std::to_string(i);
    if (util::only_whitespace(s.description)) out.push_back(tag + ": description is empty");
    if (!(s.t_start >= 0.0)) out.push_back(tag + ": t_start " + util::num(s.t_start) + " is negative");
    if (s.t_start > s.t_end) out.push_back(tag + ": t_start > t_end");
    if (i > 0) {
      const Step& prev = a.steps[i - 1];
      if (s.t_start < prev.t_start) out.push_back(tag + ": steps not sorted by t_start");
      if (s.t_start < prev.t_end && s.t_start >= prev.t_start) {
        out.push_back(tag + ": overlaps step " + std::to_string(i - 1) + " (t_start " +
                      util::num(s.t_start) + " < previous t_end " + util::num(prev.t_end) + ")");
      }
    }
  }
  return out;
}

std::vector<std::string> validate_ground_truth(const GroundTruthTurn& gt) {
  std::vector<std::string> out;
  if (gt.n_gt < 1) out.push_back("n: must be >= 1");
  if (gt.m_gt < 0) out.push_back("m: must be >= 0");
  if (gt.n_gt >= 1 && gt.m_gt > gt.n_gt) out.push_back("m: exceeds n");
  const double p = gt.p_gt.value;
  if (p < 0.0 || p > 100.0) out.push_back("p_gt: outside [0, 100]");
  if (!out.empty()) return out;

  const double n = static_cast<double>(gt.n_gt);
  const double m = static_cast<double>(gt.m_gt);
  if (gt.m_gt < gt.n_gt) {
    if (p / 100.0 < m / n - kProgressTolerance || p / 100.0 > (m + 1.0) / n + kProgressTolerance) {
      out.push_back("p_gt: " + util::num(p) + " outside band [" + util::num(100.0 * m / n) + ", " +
                    util::num(100.0 * (m + 1.0) / n) + "] for m=" + std::to_string(gt.m_gt) +
                    " of n=" + std::to_string(gt.n_gt));
    }
    if (label_complete(p)) out.push_back("p_gt: equals 100 but m < n");
  } else {
    if (!label_complete(p)) out.push_back("p_gt: m == n requires p_gt == 100");
  }
  return out;
}

int bin_index(Progress p, int n) {
  if (n < 1) throw std::invalid_argument("bin_index: n must be >= 1");
  const double scaled = p.value * static_cast<double>(n) / 100.0;
  int b = static_cast<int>(std::floor(scaled + kProgressTolerance));
  if (b < 0) b = 0;
  if (b > n) b = n;
  return b;
}

}  // namespace promon
