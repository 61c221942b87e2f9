#pragma once

#include <optional>
#include <vector>

#include "promon/core.hpp"

namespace promon {

/// Stream segmentation parameters. The two presets mirror the shipped
/// dataset configurations: 4 s snippets at 1 fps (simulator-style) and
/// 2 s snippets at 2 fps (egocentric-capture style), both with K = 4.
struct SegmentationConfig {
  double snippet_seconds = 4.0;
  int frames_per_snippet = 4;  // K
  double fps = 1.0;

  static SegmentationConfig alfred() { return {4.0, 4, 1.0}; }
  static SegmentationConfig ego4d() { return {2.0, 4, 2.0}; }
};

std::vector<std::string> validate(const SegmentationConfig& cfg);

/// A generated distractor task: shares the first shared_steps (n_r) steps of
/// its host annotation, then diverges. Its progress caps at
/// 100 * shared_steps / total_steps.
struct DistractorSpec {
  std::string description;
  int shared_steps = 0;  // n_r
  int total_steps = 0;   // n of the host annotation
};

/// Number of steps fully completed at time t (a step counts once t reaches
/// its end; instant steps complete the moment t reaches their timestamp).
int completed_steps_at(const TaskAnnotation& a, double t);

/// Progress at time t as the completed-step proportion with linear
/// interpolation inside the active step. Between steps the value holds at
/// the last completed proportion; from the final step's end onward it is 100.
/// Monotone non-decreasing in t.
Progress compute_progress_label(const TaskAnnotation& a, double t);

/// Distractor progress: the plain label capped at 100 * n_r / n. The cap is
/// reached exactly once the first n_r steps are complete and holds thereafter.
Progress compute_distractor_label(const TaskAnnotation& a, const DistractorSpec& d, double t);

/// Partitions [0, T] (T = last manifest timestamp) into consecutive
/// snippet_seconds intervals (final one may be shorter, flagged short_tail),
/// resamples the manifest to the fps grid (nearest source frame per grid
/// point, ties to the earlier frame; resampled frames carry the grid
/// timestamp), and selects K uniformly spaced frames per interval,
/// duplicating the last available frame when fewer exist (flagged padded).
/// Snippet indices start at 1. Throws on an empty manifest.
std::vector<Snippet> segment_stream(const std::vector<Frame>& manifest,
                                    const SegmentationConfig& cfg);

/// Label for one snippet, evaluated at the timestamp of its last frame.
Progress label_snippet(const TaskAnnotation& a, const Snippet& s,
                       const std::optional<DistractorSpec>& d = std::nullopt);

}  // namespace promon
