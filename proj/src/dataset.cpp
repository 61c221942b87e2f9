#include "promon/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "promon/json_io.hpp"
#include "promon/output_format.hpp"
#include "promon/prompts.hpp"
#include "promon/util.hpp"

namespace promon {

IngestResult ingest_annotations(std::istream& source) {
  if (!source) throw std::runtime_error("annotation source is unreadable");
  IngestResult result;
  auto read = io::read_jsonl(source);
  for (const auto& [line, reason] : read.rejects) result.rejects.push_back({line, reason});
  if (read.line_count == 0) throw std::runtime_error("no annotations");

  for (const auto& [line_no, j] : read.rows) {
    TaskAnnotation a;
    try {
      a = io::annotation_from_json(j);
    } catch (const std::exception& e) {
      result.rejects.push_back({line_no, e.what()});
      continue;
    }
    const auto violations = validate_annotation(a);
    if (!violations.empty()) {
      result.rejects.push_back({line_no, util::join(violations, "; ")});
      continue;
    }
    result.annotations.push_back(std::move(a));
  }
  std::sort(result.rejects.begin(), result.rejects.end(),
            [](const IngestReject& x, const IngestReject& y) { return x.line < y.line; });
  return result;
}

DistractorSpec generate_distractor_task(const TaskAnnotation& a,
                                        const std::vector<std::string>& objects,
                                        TextBackend& backend, std::mt19937_64& rng) {
  const int n = static_cast<int>(a.steps.size());
  if (n < 2) throw std::invalid_argument("distractor requires at least 2 steps");
  if (objects.empty()) throw std::invalid_argument("objects list is empty");

  std::uniform_int_distribution<int> pick(1, n - 1);
  const int n_r = pick(rng);
  std::vector<std::string> initial_steps;
  for (int i = 0; i < n_r; ++i) initial_steps.push_back(a.steps[i].description);

  const std::string prompt = prompts::render_distractor_prompt(a.task, initial_steps, objects);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply = backend.complete_text(prompt);
    const auto lines = util::split_nonempty_lines(reply);
    if (!lines.empty()) return DistractorSpec{lines.front(), n_r, n};
  }
  throw std::runtime_error("generation_failed: empty distractor reply");
}

CotGenResult generate_training_cot(const CotGenContext& ctx, TextBackend& backend) {
  if (static_cast<int>(ctx.completed.size()) != ctx.m) {
    throw std::invalid_argument("completed narration count must equal m");
  }
  const int expected = static_cast<int>(std::lround(ctx.progress_label));
  const std::string prompt = prompts::render_cot_generation_prompt(
      ctx.task_description, ctx.completed, ctx.uncompleted, expected);

  CotGenResult result;
  for (int attempt = 0; attempt < 2; ++attempt) {
    result.attempts = attempt + 1;
    const std::string reply = backend.complete_text(prompt);
    auto parsed = parse_model_output(reply);
    if (!parse_ok(parsed)) {
      result.error = std::string("reply unparseable: ") +
                     to_string(std::get<ParseFailure>(parsed).reason);
      continue;
    }
    auto& out = std::get<ParsedOutput>(parsed);
    if (out.progress != expected) {
      result.error = "progress echo mismatch: expected " + std::to_string(expected) + ", got " +
                     std::to_string(out.progress);
      continue;
    }
    result.ok = true;
    result.cot = std::move(out.cot_text);
    return result;
  }
  return result;
}

std::vector<Frame> synthesize_frames(const TaskAnnotation& a, double fps) {
  if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
  const double total = a.total_duration();
  const std::string base =
      "synthetic://" + (a.video_ref.empty() ? std::string("stream") : a.video_ref);
  std::vector<Frame> out;
  for (std::size_t j = 0;; ++j) {
    const double ts = static_cast<double>(j) / fps;
    if (ts > total + 1e-9) break;
    out.push_back({ts, {ImagePayload::Kind::uri, base + "/" + std::to_string(j)}, "image/jpeg"});
  }
  if (out.empty() || total - out.back().timestamp > 1e-9) {
    out.push_back({total,
                   {ImagePayload::Kind::uri, base + "/" + std::to_string(out.size())},
                   "image/jpeg"});
  }
  return out;
}

std::string trajectory_id(const TaskAnnotation& a, std::size_t index) {
  if (!a.video_ref.empty()) return a.video_ref;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "traj-%05zu", index);
  return buf;
}

namespace {

struct TrajectoryOutcome {
  std::vector<DialogueTuple> tuples;
  std::vector<std::string> log_lines;
  std::size_t rejected_tuples = 0;
  std::size_t emitted_variants = 0;
  bool failed = false;
};

void emit_variant(const TaskAnnotation& a, const std::string& traj_id,
                  const std::vector<Snippet>& snippets,
                  const std::optional<DistractorSpec>& distractor, TextBackend& backend,
                  TrajectoryOutcome& out) {
  const int n = static_cast<int>(a.steps.size());
  const std::string variant = distractor ? "distractor" : "original";
  std::string history{prompts::kFirstTurnHistory};
  std::size_t emitted = 0;
  for (const Snippet& snippet : snippets) {
    const double t = snippet.last_timestamp();
    const int k = completed_steps_at(a, t);
    const int m = distractor ? std::min(k, distractor->shared_steps) : k;
    const Progress label =
        distractor ? compute_distractor_label(a, *distractor, t) : compute_progress_label(a, t);

    CotGenContext ctx;
    ctx.task_description = distractor ? distractor->description : a.task;
    for (int i = 0; i < m; ++i) ctx.completed.push_back(a.steps[i].description);
    for (int i = m; i < n; ++i) ctx.uncompleted.push_back(a.steps[i].description);
    ctx.progress_label = label.value;
    ctx.n = n;
    ctx.m = m;

    const CotGenResult cot = generate_training_cot(ctx, backend);
    if (!cot.ok) {
      ++out.rejected_tuples;
      out.log_lines.push_back(traj_id + " " + variant + " turn " +
                              std::to_string(snippet.index) + ": " + cot.error);
      continue;  // history threads over surviving tuples
    }

    DialogueTuple tuple;
    tuple.traj_id = traj_id;
    tuple.turn = snippet.index;
    for (const Frame& f : snippet.frames) tuple.frames.push_back(f.payload.value);
    tuple.history_cot = history;
    tuple.target_cot = cot.cot;
    tuple.progress_label = label.value;
    tuple.task_variant = variant;
    tuple.n = n;
    tuple.m = m;
    history = tuple.target_cot;
    out.tuples.push_back(std::move(tuple));
    ++emitted;
  }
  if (emitted > 0) ++out.emitted_variants;
}

nlohmann::ordered_json tuple_to_json(const DialogueTuple& t) {
  return {{"traj_id", t.traj_id},
          {"turn", t.turn},
          {"frames", t.frames},
          {"history_cot", t.history_cot},
          {"target_cot", t.target_cot},
          {"progress_label", t.progress_label},
          {"task_variant", t.task_variant},
          {"n", t.n},
          {"m", t.m}};
}

}  // namespace

DatasetStats build_dialogue_dataset(const std::vector<TaskAnnotation>& annotations,
                                    const SegmentationConfig& cfg, TextBackend& backend,
                                    const DatasetOptions& options,
                                    const FramesProvider& frames_provider) {
  if (annotations.empty()) throw std::invalid_argument("no annotations");
  if (options.out_dir.empty()) throw std::invalid_argument("out_dir is required");
  if (options.shard_size == 0) throw std::invalid_argument("shard_size must be positive");
  const auto cfg_errors = validate(cfg);
  if (!cfg_errors.empty()) {
    throw std::invalid_argument("segmentation config: " + cfg_errors.front());
  }
  std::filesystem::create_directories(options.out_dir);

  std::vector<TrajectoryOutcome> outcomes(annotations.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= annotations.size()) break;
      const TaskAnnotation& a = annotations[i];
      TrajectoryOutcome& out = outcomes[i];
      const std::string traj_id = trajectory_id(a, i + 1);
      try {
        const std::vector<Frame> frames =
            frames_provider ? frames_provider(a, i) : synthesize_frames(a, cfg.fps);
        const std::vector<Snippet> snippets = segment_stream(frames, cfg);
        emit_variant(a, traj_id, snippets, std::nullopt, backend, out);
        if (options.include_distractor) {
          if (a.steps.size() < 2) {
            out.log_lines.push_back(traj_id + " distractor skipped: single-step task");
          } else {
            std::mt19937_64 rng(options.seed ^ util::fnv1a(traj_id));
            try {
              const DistractorSpec d =
                  generate_distractor_task(a, options.objects, backend, rng);
              emit_variant(a, traj_id, snippets, d, backend, out);
            } catch (const std::exception& e) {
              out.log_lines.push_back(traj_id + " distractor skipped: " + std::string(e.what()));
            }
          }
        }
      } catch (const std::exception& e) {
        out.failed = true;
        out.log_lines.push_back(traj_id + " failed: " + std::string(e.what()));
      }
    }
  };

  const int threads =
      std::clamp(options.parallelism, 1, static_cast<int>(annotations.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  DatasetStats stats;
  std::size_t failed = 0;
  std::vector<std::string> shard_names;
  std::ofstream shard;
  std::size_t in_shard = 0;
  auto open_next_shard = [&] {
    char name[48];
    std::snprintf(name, sizeof(name), "tuples-%05zu.jsonl", shard_names.size());
    shard_names.emplace_back(name);
    shard = std::ofstream(options.out_dir / name, std::ios::binary | std::ios::trunc);
    if (!shard) throw std::runtime_error("cannot write shard: " + std::string(name));
    in_shard = 0;
  };

  std::ofstream reject_log(options.out_dir / "rejects.log", std::ios::binary | std::ios::trunc);
  for (const TrajectoryOutcome& out : outcomes) {
    for (const std::string& line : out.log_lines) reject_log << line << '\n';
    failed += out.failed ? 1 : 0;
    stats.rejects += out.rejected_tuples;
    stats.trajectories += out.emitted_variants;
    for (const DialogueTuple& tuple : out.tuples) {
      if (shard_names.empty() || in_shard >= options.shard_size) open_next_shard();
      shard << tuple_to_json(tuple).dump() << '\n';
      ++in_shard;
      ++stats.tuples;
    }
  }
  shard.close();
  reject_log.close();
  stats.rejects += failed;
  if (failed == annotations.size()) {
    throw std::runtime_error("every trajectory failed; see rejects.log");
  }
  stats.mean_turns = stats.trajectories == 0
                         ? 0.0
                         : static_cast<double>(stats.tuples) /
                               static_cast<double>(stats.trajectories);

  nlohmann::ordered_json stats_json = {{"trajectories", stats.trajectories},
                                       {"tuples", stats.tuples},
                                       {"mean_turns", stats.mean_turns},
                                       {"rejects", stats.rejects}};
  io::write_text_file((options.out_dir / "stats.json").string(), stats_json.dump(2) + "\n");
  nlohmann::ordered_json manifest = {{"shards", shard_names}, {"stats", stats_json}};
  io::write_text_file((options.out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return stats;
}

}  // namespace promon
