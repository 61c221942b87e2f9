#include "promon/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "promon/util.hpp"

namespace promon {

namespace {

constexpr double kEps = 1e-9;

// Completed proportion plus intra-step interpolation, as a fraction of 1.
// Kept as a fraction so the distractor cap n_r/n compares exactly.
double progress_fraction(const TaskAnnotation& a, double t) {
  if (a.steps.empty()) throw std::invalid_argument("progress label: annotation has no steps");
  if (t < 0.0) throw std::invalid_argument("progress label: t must be >= 0");
  const double n = static_cast<double>(a.steps.size());
  std::size_t k = 0;
  while (k < a.steps.size() && t >= a.steps[k].t_end) ++k;
  if (k == a.steps.size()) return 1.0;
  const Step& active = a.steps[k];
  double frac = 0.0;
  if (t >= active.t_start && !active.instant()) {
    frac = (t - active.t_start) / (active.t_end - active.t_start);
  }
  return static_cast<double>(k) / n + frac / n;
}

}  // namespace

std::vector<std::string> validate(const SegmentationConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.snippet_seconds > 0.0)) out.push_back("snippet_seconds: must be positive");
  if (cfg.frames_per_snippet < 1) out.push_back("frames_per_snippet: must be >= 1");
  if (!(cfg.fps > 0.0)) out.push_back("fps: must be positive");
  return out;
}

int completed_steps_at(const TaskAnnotation& a, double t) {
  int k = 0;
  for (const Step& s : a.steps) {
    if (t >= s.t_end) ++k;
    else break;
  }
  return k;
}

Progress compute_progress_label(const TaskAnnotation& a, double t) {
  return clamped_progress(100.0 * progress_fraction(a, t));
}

Progress compute_distractor_label(const TaskAnnotation& a, const DistractorSpec& d, double t) {
  if (d.total_steps != static_cast<int>(a.steps.size())) {
    throw std::invalid_argument("distractor label: spec step count does not match annotation");
  }
  if (d.shared_steps < 0 || d.shared_steps > d.total_steps) {
    throw std::invalid_argument("distractor label: shared_steps outside [0, n]");
  }
  const double cap = static_cast<double>(d.shared_steps) / static_cast<double>(d.total_steps);
  return clamped_progress(100.0 * std::min(cap, progress_fraction(a, t)));
}

std::vector<Snippet> segment_stream(const std::vector<Frame>& manifest,
                                    const SegmentationConfig& cfg) {
  if (manifest.empty()) throw std::runtime_error("empty stream");
  const auto cfg_errors = validate(cfg);
  if (!cfg_errors.empty()) {
    throw std::invalid_argument("segmentation config: " + cfg_errors.front());
  }
  for (std::size_t i = 1; i < manifest.size(); ++i) {
    if (manifest[i].timestamp < manifest[i - 1].timestamp) {
      throw std::invalid_argument("manifest timestamps must be non-decreasing");
    }
  }

  const double total = manifest.back().timestamp;

  // Resample onto the fps grid: one frame per grid point, payload from the
  // nearest source frame (ties resolve to the earlier frame). The terminal
  // frame is appended when the stream end is off-grid.
  std::vector<Frame> grid;
  const double step = 1.0 / cfg.fps;
  std::size_t src = 0;
  for (std::size_t j = 0;; ++j) {
    const double target = static_cast<double>(j) * step;
    if (target > total + kEps) break;
    while (src + 1 < manifest.size() &&
           std::abs(manifest[src + 1].timestamp - target) <
               std::abs(manifest[src].timestamp - target)) {
      ++src;
    }
    Frame f = manifest[src];
    f.timestamp = std::min(target, total);
    grid.push_back(std::move(f));
  }
  if (grid.empty() || total - grid.back().timestamp > kEps) {
    Frame f = manifest.back();
    f.timestamp = total;
    grid.push_back(std::move(f));
  }

  const int K = cfg.frames_per_snippet;
  std::vector<Snippet> out;
  std::size_t cursor = 0;
  while (true) {
    const double begin = static_cast<double>(out.size()) * cfg.snippet_seconds;
    const bool final_interval = begin + cfg.snippet_seconds >= total - kEps;
    const double end = final_interval ? total : begin + cfg.snippet_seconds;

    Snippet s;
    s.index = static_cast<int>(out.size()) + 1;
    s.t_begin = begin;
    s.t_end = end;
    s.short_tail = final_interval && (end - begin < cfg.snippet_seconds - kEps);

    // Members: grid frames in [begin, end); the final interval also takes end.
    std::vector<Frame> members;
    while (cursor < grid.size() &&
           (grid[cursor].timestamp < end - kEps ||
            (final_interval && grid[cursor].timestamp <= end + kEps))) {
      members.push_back(grid[cursor]);
      ++cursor;
    }
    if (members.empty()) {
      // Misaligned configs can leave an interval without a grid point; hold
      // the previous observation, restamped to the interval start.
      Frame f = cursor > 0 ? grid[cursor - 1] : grid.front();
      f.timestamp = begin;
      members.push_back(std::move(f));
      s.padded = true;
    }

    const int m = static_cast<int>(members.size());
    if (m >= K) {
      if (K == 1) {
        s.frames.push_back(members.back());
      } else {
        for (int j = 0; j < K; ++j) {
          const double pos = static_cast<double>(j) * (m - 1) / static_cast<double>(K - 1);
          s.frames.push_back(members[static_cast<std::size_t>(std::lround(pos))]);
        }
      }
    } else {
      s.frames = members;
      while (static_cast<int>(s.frames.size()) < K) s.frames.push_back(members.back());
      s.padded = true;
    }
    out.push_back(std::move(s));

    if (final_interval) break;
  }
  return out;
}

Progress label_snippet(const TaskAnnotation& a, const Snippet& s,
                       const std::optional<DistractorSpec>& d) {
  if (s.frames.empty()) throw std::invalid_argument("label_snippet: snippet has no frames");
  const double t = s.last_timestamp();
  return d ? compute_distractor_label(a, *d, t) : compute_progress_label(a, t);
}

}  // namespace promon
