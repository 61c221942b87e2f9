#include "promon/ledger.hpp"

#include <algorithm>
#include <array>

#include "promon/util.hpp"

namespace promon {

namespace {

enum class Section { completed, in_progress, pending };

struct MarkerHit {
  std::size_t start = 0;  // marker position in the haystack
  std::size_t body = 0;   // first character after the colon
  Section section = Section::completed;
};

struct MarkerPattern {
  std::string_view text;
  Section section;
};

// Longer variants first so "completed steps:" wins over "completed:".
constexpr std::array<MarkerPattern, 9> kMarkers = {{
    {"completed steps:", Section::completed},
    {"completed:", Section::completed},
    {"in progress:", Section::in_progress},
    {"in-progress:", Section::in_progress},
    {"remaining steps:", Section::pending},
    {"remaining:", Section::pending},
    {"pending steps:", Section::pending},
    {"pending:", Section::pending},
    {"uncompleted:", Section::pending},
}};

std::vector<std::string> split_items(std::string_view body) {
  std::vector<std::string> items;
  std::string current;
  auto flush = [&] {
    std::string_view t = util::trim(current);
    while (!t.empty() && (t.front() == '-' || t.front() == '*')) t = util::trim(t.substr(1));
    const bool numeric_only =
        !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (!t.empty() && !numeric_only && util::to_lower(t) != "none") items.emplace_back(t);
    current.clear();
  };
  for (char c : body) {
    if (c == ';' || c == '.' || c == '\n') {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  return items;
}

}  // namespace

StepLedger parse_step_ledger(std::string_view cot_text) {
  const std::string haystack = util::to_lower(cot_text);

  std::vector<MarkerHit> hits;
  std::size_t pos = 0;
  while (pos < haystack.size()) {
    std::size_t best = std::string::npos;
    const MarkerPattern* best_pattern = nullptr;
    for (const auto& pattern : kMarkers) {
      const std::size_t at = haystack.find(pattern.text, pos);
      if (at == std::string::npos) continue;
      if (best_pattern == nullptr || at < best) {
        best = at;
        best_pattern = &pattern;
      }
    }
    if (best_pattern == nullptr) break;
    hits.push_back({best, best + best_pattern->text.size(), best_pattern->section});
    pos = best + best_pattern->text.size();
  }

  StepLedger ledger;
  if (hits.empty()) {
    ledger.low_confidence = true;
    return ledger;
  }

  for (std::size_t i = 0; i < hits.size(); ++i) {
    const std::size_t end = i + 1 < hits.size() ? hits[i + 1].start : cot_text.size();
    const std::string_view body = cot_text.substr(hits[i].body, end - hits[i].body);
    auto items = split_items(body);
    auto& target = hits[i].section == Section::completed  ? ledger.completed
                   : hits[i].section == Section::pending ? ledger.pending
                                                         : ledger.in_progress;
    for (auto& item : items) target.push_back(std::move(item));
  }

  // At most one step may be in progress; extras fall back to pending.
  while (ledger.in_progress.size() > 1) {
    ledger.pending.insert(ledger.pending.begin(), std::move(ledger.in_progress.back()));
    ledger.in_progress.pop_back();
  }
  return ledger;
}

std::string render_marker_cot(std::string_view task_lower, int progress_percent,
                              const std::vector<std::string>& completed,
                              const std::vector<std::string>& in_progress,
                              const std::vector<std::string>& pending) {
  std::string body = "To determine the progress of the task \"";
  body += task_lower;
  body += "\", let's analyze the video: about ";
  body += std::to_string(progress_percent);
  body += "% of the steps are done.";
  if (!completed.empty()) {
    body += "\nCompleted: " + util::join(completed, "; ") + ".";
  }
  if (!in_progress.empty()) {
    body += "\nIn progress: " + util::join(in_progress, "; ") + ".";
  }
  if (!pending.empty()) {
    body += "\nRemaining: " + util::join(pending, "; ") + ".";
  }
  return body;
}

}  // namespace promon
