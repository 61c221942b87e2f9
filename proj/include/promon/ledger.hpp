#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promon {

/// Parsed step status lists. Statuses partition the steps; at most one step
/// is in progress. low_confidence marks ledgers recovered from text that
/// carried no recognizable structure.
struct StepLedger {
  std::vector<std::string> completed;
  std::vector<std::string> in_progress;
  std::vector<std::string> pending;
  bool low_confidence = false;

  bool empty() const { return completed.empty() && in_progress.empty() && pending.empty(); }
};

/// Builtin marker parser. Recognizes "Completed:", "In progress:",
/// "Remaining:"/"Pending:" sections (case-insensitive, optional "steps"
/// before the colon); items split on ';', '.', and newlines. Text without
/// any marker yields an empty ledger flagged low_confidence.
StepLedger parse_step_ledger(std::string_view cot_text);

/// Renders the marker structure the builtin parser recognizes; the summary
/// line comes first so the trailing sections stay clean for parsing.
std::string render_marker_cot(std::string_view task_lower, int progress_percent,
                              const std::vector<std::string>& completed,
                              const std::vector<std::string>& in_progress,
                              const std::vector<std::string>& pending);

}  // namespace promon
