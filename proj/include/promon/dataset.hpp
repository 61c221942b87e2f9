#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <random>
#include <string>
#include <vector>

#include "promon/backend.hpp"
#include "promon/core.hpp"
#include "promon/labeling.hpp"

namespace promon {

/// One training record: the snippet's frame references, the threaded history
/// CoT ("None" on turn 1), the generated target CoT, and the progress label
/// with its (m, n) step counts.
struct DialogueTuple {
  std::string traj_id;
  int turn = 0;
  std::vector<std::string> frames;
  std::string history_cot;
  std::string target_cot;
  double progress_label = 0.0;
  std::string task_variant;  // "original" | "distractor"
  int n = 0;
  int m = 0;
};

struct IngestReject {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<TaskAnnotation> annotations;
  std::vector<IngestReject> rejects;
};

/// Parses annotation JSONL and validates every record. Malformed or invalid
/// lines are logged to the rejects list and skipped; a stream with no records
/// at all throws ("no annotations").
IngestResult ingest_annotations(std::istream& source);

/// Renders the distractor prompt with the original task, its first n_r step
/// narrations (n_r uniform in [1, n-1]), and the object list; the reply's
/// first non-empty line becomes the description. Empty replies retry once,
/// then the call fails. Tasks with fewer than two steps are rejected.
DistractorSpec generate_distractor_task(const TaskAnnotation& a,
                                        const std::vector<std::string>& objects,
                                        TextBackend& backend, std::mt19937_64& rng);

struct CotGenContext {
  std::string task_description;
  std::vector<std::string> completed;    // narrations of completed steps; size == m
  std::vector<std::string> uncompleted;  // remaining narrations
  double progress_label = 0.0;
  int n = 0;
  int m = 0;
};

struct CotGenResult {
  bool ok = false;
  std::string cot;  // think-block body
  std::string error;
  int attempts = 0;
};

/// Renders the CoT-generation prompt and verifies the reply echoes
/// round(progress_label) in its answer block; one retry, then the tuple is
/// rejected.
CotGenResult generate_training_cot(const CotGenContext& ctx, TextBackend& backend);

struct DatasetOptions {
  bool include_distractor = false;
  std::vector<std::string> objects;  // distractor candidates
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::size_t shard_size = 10000;
  std::filesystem::path out_dir;
};

struct DatasetStats {
  std::size_t trajectories = 0;  // emitted dialogue sequences (variants count separately)
  std::size_t tuples = 0;
  double mean_turns = 0.0;
  std::size_t rejects = 0;
};

/// Frames for one annotation; defaults to a synthesized manifest over the
/// annotation's time span at the configured fps.
using FramesProvider = std::function<std::vector<Frame>(const TaskAnnotation&, std::size_t)>;

std::vector<Frame> synthesize_frames(const TaskAnnotation& a, double fps);

/// Positional/video_ref-derived identifier used across emitted files.
std::string trajectory_id(const TaskAnnotation& a, std::size_t index);

/// Segments each annotation, labels every snippet, generates target CoTs
/// turn by turn with history threading, and writes sharded dialogue-tuple
/// JSONL plus manifest.json, stats.json, and rejects.log under out_dir.
/// Distractor variants reuse the original snippets with capped labels.
/// Per-trajectory failures are logged and skipped; throws only when every
/// trajectory fails.
DatasetStats build_dialogue_dataset(const std::vector<TaskAnnotation>& annotations,
                                    const SegmentationConfig& cfg, TextBackend& backend,
                                    const DatasetOptions& options,
                                    const FramesProvider& frames_provider = {});

}  // namespace promon
