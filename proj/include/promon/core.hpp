#pragma once

#include <compare>
#include <string>
#include <vector>

namespace promon {

// Tolerance for comparing real-valued progress against exact boundaries
// (completion checks, ground-truth band validation, bin snapping).
inline constexpr double kProgressTolerance = 1e-9;

/// One annotated step: free-text description plus its execution window in
/// seconds. t_start == t_end marks an instant step that completes atomically
/// at that timestamp.
struct Step {
  std::string description;
  double t_start = 0.0;
  double t_end = 0.0;

  bool instant() const { return t_start == t_end; }
};

/// A task description with its ordered, non-overlapping steps and an opaque
/// reference to the frame manifest the steps were annotated against.
struct TaskAnnotation {
  std::string task;
  std::string video_ref;
  std::vector<Step> steps;

  double total_duration() const { return steps.empty() ? 0.0 : steps.back().t_end; }
};

/// Opaque image payload. Only the backend wire layer interprets it; numeric
/// modules never look inside.
struct ImagePayload {
  enum class Kind { uri, base64 };
  Kind kind = Kind::uri;
  std::string value;
};

struct Frame {
  double timestamp = 0.0;
  ImagePayload payload;
  std::string media_type = "image/jpeg";
};

/// K timestamped frames covering one interval of the stream; the unit of one
/// recurrent inference turn. Indices are 1-based.
struct Snippet {
  int index = 0;
  std::vector<Frame> frames;
  double t_begin = 0.0;
  double t_end = 0.0;
  bool short_tail = false;  // final interval shorter than the configured duration
  bool padded = false;      // frames were duplicated to reach K

  double last_timestamp() const { return frames.empty() ? t_end : frames.back().timestamp; }
};

/// Normalized task progress in [0, 100].
struct Progress {
  double value = 0.0;
  auto operator<=>(const Progress&) const = default;
};

inline Progress clamped_progress(double v) {
  return Progress{v < 0.0 ? 0.0 : (v > 100.0 ? 100.0 : v)};
}

/// Ground truth for one turn: the progress label plus the step-count pair
/// (m completed of n total).
struct GroundTruthTurn {
  Progress p_gt;
  int n_gt = 1;
  int m_gt = 0;
};

/// Returns [] iff every annotation and step invariant holds. Each entry names
/// the offending field and the rule broken. Violations are data, not failures.
std::vector<std::string> validate_annotation(const TaskAnnotation& a);

/// Checks n >= 1, 0 <= m <= n, the progress band m/n <= p/100 <= (m+1)/n for
/// m < n, and p == 100 iff m == n.
std::vector<std::string> validate_ground_truth(const GroundTruthTurn& gt);

/// The discrete progress bin: the unique b with b/n <= p/100 < (b+1)/n, with
/// p == 100 mapping to the completed bin n. Result is always in [0, n].
/// Values within kProgressTolerance of a boundary snap upward so that labels
/// computed as 100*(k/n) land in their exact bin.
int bin_index(Progress p, int n);

/// True when a real-valued (label) progress equals 100 within tolerance.
inline bool label_complete(double v) { return v > 100.0 - kProgressTolerance; }

/// True when a predicted progress equals 100. Predictions enter the system as
/// parsed integers, so the comparison is exact.
inline bool prediction_complete(double v) { return v == 100.0; }

}  // namespace promon
