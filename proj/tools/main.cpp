#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "promon/dataset.hpp"
#include "promon/json_io.hpp"
#include "promon/runner.hpp"
#include "promon/service.hpp"
#include "promon/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Single-line machine-parseable error on stderr.
void print_error(const std::string& code, const std::string& message) {
  json j = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

struct SegFlags {
  std::string preset = "alfred";
  std::optional<double> snippet_seconds;
  std::optional<int> frames_per_snippet;
  std::optional<double> fps;

  promon::SegmentationConfig resolve() const {
    promon::SegmentationConfig cfg = preset == "ego4d"
                                         ? promon::SegmentationConfig::ego4d()
                                         : promon::SegmentationConfig::alfred();
    if (snippet_seconds) cfg.snippet_seconds = *snippet_seconds;
    if (frames_per_snippet) cfg.frames_per_snippet = *frames_per_snippet;
    if (fps) cfg.fps = *fps;
    return cfg;
  }
};

void add_seg_flags(CLI::App* cmd, SegFlags& flags) {
  cmd->add_option("--preset", flags.preset, "Segmentation preset: alfred (4s/K=4/1fps) or ego4d (2s/K=4/2fps)")
      ->check(CLI::IsMember({"alfred", "ego4d"}));
  cmd->add_option("--snippet-seconds", flags.snippet_seconds, "Override snippet duration");
  cmd->add_option("--frames-per-snippet", flags.frames_per_snippet, "Override K");
  cmd->add_option("--fps", flags.fps, "Override sampling rate");
}

struct RewardFlags {
  promon::RewardConfig cfg;
};

void add_reward_flags(CLI::App* cmd, RewardFlags& flags) {
  cmd->add_option("--delta1", flags.cfg.delta1, "MAE tolerance");
  cmd->add_option("--delta2", flags.cfg.delta2, "Improvement scale");
  cmd->add_option("--alpha", flags.cfg.alpha, "Improvement weight");
  cmd->add_option("--beta", flags.cfg.beta, "Finish weight");
}

std::vector<promon::TaskAnnotation> load_annotations(const std::string& path,
                                                     bool log_rejects = true) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read annotations: " + path);
  auto result = promon::ingest_annotations(in);
  if (log_rejects) {
    for (const auto& r : result.rejects) {
      std::cerr << "reject line " << r.line << ": " << r.reason << "\n";
    }
  }
  if (result.annotations.empty()) {
    throw std::runtime_error("no valid annotations in " + path);
  }
  return result.annotations;
}

promon::FramesProvider manifest_provider(const std::string& manifest_file,
                                         const std::string& manifest_dir) {
  if (manifest_file.empty() && manifest_dir.empty()) return {};
  return [manifest_file, manifest_dir](const promon::TaskAnnotation& a, std::size_t) {
    fs::path path = manifest_file;
    if (!manifest_dir.empty()) {
      path = fs::path(manifest_dir) / (a.video_ref + ".json");
    }
    const auto doc = json::parse(promon::io::read_text_file(path.string()));
    return promon::io::manifest_from_json(doc);
  };
}

int cmd_label(const std::string& annotations_path, const std::string& manifest_file,
              const std::string& manifest_dir, const SegFlags& seg, const std::string& out_path) {
  const auto annotations = load_annotations(annotations_path);
  const auto cfg = seg.resolve();
  const auto provider = manifest_provider(manifest_file, manifest_dir);

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write output: " + out_path);
  std::size_t rows = 0;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    const auto frames = provider ? provider(a, i) : promon::synthesize_frames(a, cfg.fps);
    const auto snippets = promon::segment_stream(frames, cfg);
    const std::string traj_id = promon::trajectory_id(a, i + 1);
    for (const auto& s : snippets) {
      const auto label = promon::label_snippet(a, s);
      out << promon::io::labeled_snippet_row(traj_id, s, label).dump() << '\n';
      ++rows;
    }
  }
  std::cerr << "labeled " << rows << " snippets across " << annotations.size()
            << " trajectories -> " << out_path << "\n";
  return 0;
}

int cmd_build_dataset(const std::string& annotations_path, const std::string& out_dir,
                      const SegFlags& seg, bool include_distractor,
                      const std::string& objects_csv, std::uint64_t seed, int parallelism,
                      std::size_t shard_size, const std::string& backend_kind,
                      const std::string& base_url, const std::string& model,
                      const std::string& manifest_file, const std::string& manifest_dir) {
  const auto annotations = load_annotations(annotations_path);

  promon::DatasetOptions options;
  options.include_distractor = include_distractor;
  options.seed = seed;
  options.parallelism = parallelism;
  options.shard_size = shard_size;
  options.out_dir = out_dir;
  {
    std::stringstream ss(objects_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto t = promon::util::trim(item);
      if (!t.empty()) options.objects.emplace_back(t);
    }
  }
  if (include_distractor && options.objects.empty()) {
    options.objects = {"Apple", "Mug",   "Pot",   "Cup",    "Egg",   "Bread",
                       "Plate", "Knife", "Spoon", "Tomato", "Bowl",  "Pan"};
  }

  std::unique_ptr<promon::TextBackend> backend;
  if (backend_kind == "mock") {
    backend = std::make_unique<promon::MockTextBackend>();
  } else {
    promon::RemoteBackendConfig rc;
    rc.base_url = base_url;
    rc.model = model;
    if (rc.base_url.empty()) throw std::runtime_error("--base-url is required for --backend remote");
    backend = std::make_unique<promon::RemoteTextBackend>(rc);
  }

  const auto stats = promon::build_dialogue_dataset(
      annotations, seg.resolve(), *backend, options,
      manifest_provider(manifest_file, manifest_dir));
  json j = {{"trajectories", stats.trajectories},
            {"tuples", stats.tuples},
            {"mean_turns", stats.mean_turns},
            {"rejects", stats.rejects}};
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_eval(const std::string& predictions_path, const std::string& ground_truth_path,
             const std::string& json_out) {
  auto read_rows = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read: " + path);
    auto result = promon::io::read_jsonl(in);
    if (!result.rejects.empty()) {
      throw std::runtime_error(path + " line " + std::to_string(result.rejects.front().first) +
                               ": " + result.rejects.front().second);
    }
    return result.rows;
  };

  std::vector<promon::io::PredictionRow> predictions;
  for (const auto& [line, j] : read_rows(predictions_path)) {
    (void)line;
    predictions.push_back(promon::io::prediction_row_from_json(j));
  }
  std::vector<promon::io::GroundTruthRow> ground_truth;
  for (const auto& [line, j] : read_rows(ground_truth_path)) {
    (void)line;
    ground_truth.push_back(promon::io::ground_truth_row_from_json(j));
  }

  const auto result = promon::evaluate_logs(predictions, ground_truth);
  std::cout << promon::io::report_table(result.report);
  const auto doc = promon::io::report_to_json(result.report, result.per_trajectory);
  if (!json_out.empty()) {
    promon::io::write_text_file(json_out, doc.dump(2) + "\n");
  } else {
    std::cout << doc.dump() << "\n";
  }
  return 0;
}

int cmd_replay(const std::string& annotations_path, const std::string& out_dir,
               const SegFlags& seg, const RewardFlags& reward, double noise,
               double malformed_rate, std::uint64_t seed, int retry_budget) {
  const auto annotations = load_annotations(annotations_path);
  promon::ReplayOptions options;
  options.segmentation = seg.resolve();
  options.reward = reward.cfg;
  options.mock = {noise, malformed_rate, seed, 0};
  options.retry_budget = retry_budget;
  options.out_dir = out_dir;
  const auto result = promon::run_replay(annotations, options);
  std::cout << promon::io::report_table(result.report);
  std::cout << "degraded_turns=" << result.degraded_turns << " sessions=" << result.sessions
            << "\n";
  return 0;
}

int cmd_reward_score(double p, std::optional<double> p_prev, double gt,
                     std::optional<double> gt_prev, int n, int m, const RewardFlags& reward,
                     const std::string& raw_output, const std::string& raw_file) {
  promon::GroundTruthTurn turn{promon::Progress{gt}, n, m};
  const auto violations = promon::validate_ground_truth(turn);
  if (!violations.empty()) {
    throw std::runtime_error("invalid ground truth: " + promon::util::join(violations, "; "));
  }
  if (p_prev.has_value() != gt_prev.has_value()) {
    throw std::runtime_error("--p-prev and --gt-prev must be given together");
  }
  std::optional<std::string> raw;
  if (!raw_file.empty()) {
    raw = promon::io::read_text_file(raw_file);
  } else if (!raw_output.empty()) {
    raw = raw_output;
  }
  const auto rb = promon::overall_reward(
      raw ? std::optional<std::string_view>(*raw) : std::nullopt, promon::Progress{p},
      p_prev ? std::optional<promon::Progress>(promon::Progress{*p_prev}) : std::nullopt, turn,
      gt_prev ? std::optional<promon::Progress>(promon::Progress{*gt_prev}) : std::nullopt,
      reward.cfg);
  auto out = promon::io::reward_breakdown_to_json(rb);
  out["config"] = promon::io::reward_config_to_json(reward.cfg);
  std::cout << out.dump() << "\n";
  return 0;
}

std::function<void(int)> g_signal_handler;
void signal_trampoline(int sig) {
  if (g_signal_handler) g_signal_handler(sig);
}

int cmd_serve(const std::string& config_path) {
  std::string text;
  try {
    text = promon::io::read_text_file(config_path);
  } catch (const std::exception& e) {
    print_error("bad_config", e.what());
    return kExitUsage;
  }
  promon::ServiceConfig cfg;
  try {
    cfg = promon::service_config_from_json_text(text);
  } catch (const std::exception& e) {
    print_error("bad_config", e.what());
    return kExitUsage;
  }
  const auto violations = validate(cfg);
  if (!violations.empty()) {
    print_error("bad_config", promon::util::join(violations, "; "));
    return kExitUsage;
  }

  promon::ProgressService service(cfg);
  if (!service.start()) {
    print_error("bind_failed", "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    return kExitRuntime;
  }
  std::cerr << "serving on " << cfg.host << ":" << service.port() << "\n";

  static std::atomic<bool> stop{false};
  g_signal_handler = [](int) { stop.store(true); };
  std::signal(SIGINT, signal_trampoline);
  std::signal(SIGTERM, signal_trampoline);
  while (!stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promon: long-horizon task-progress estimation runtime"};
  app.require_subcommand(1);

  // label
  auto* label = app.add_subcommand("label", "Segment streams and emit labeled snippets");
  std::string label_annotations, label_manifest, label_manifest_dir, label_out;
  SegFlags label_seg;
  label->add_option("--annotations", label_annotations, "Annotation JSONL")->required();
  label->add_option("--manifest", label_manifest, "Frame manifest JSON (single stream)");
  label->add_option("--manifest-dir", label_manifest_dir,
                    "Directory of <video_ref>.json manifests");
  label->add_option("--out", label_out, "Output JSONL path")->required();
  add_seg_flags(label, label_seg);

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "Construct dialogue tuples");
  std::string build_annotations, build_out_dir, build_objects, build_backend = "mock";
  std::string build_base_url, build_model, build_manifest, build_manifest_dir;
  bool build_distractor = false;
  std::uint64_t build_seed = 0;
  int build_parallelism = 1;
  std::size_t build_shard = 10000;
  SegFlags build_seg;
  build->add_option("--annotations", build_annotations, "Annotation JSONL")->required();
  build->add_option("--out-dir", build_out_dir, "Output directory")->required();
  build->add_flag("--include-distractor", build_distractor, "Also emit a distractor variant");
  build->add_option("--objects", build_objects,
                    "Comma-separated candidate objects for distractor generation");
  build->add_option("--seed", build_seed, "Sampling seed");
  build->add_option("--parallelism", build_parallelism, "Concurrent trajectories");
  build->add_option("--shard-size", build_shard, "Tuples per output shard");
  build->add_option("--backend", build_backend, "Text backend: mock or remote")
      ->check(CLI::IsMember({"mock", "remote"}));
  build->add_option("--base-url", build_base_url, "Remote backend base URL");
  build->add_option("--model", build_model, "Remote backend model name");
  build->add_option("--manifest", build_manifest, "Frame manifest JSON (single stream)");
  build->add_option("--manifest-dir", build_manifest_dir,
                    "Directory of <video_ref>.json manifests");
  add_seg_flags(build, build_seg);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a prediction log against ground truth");
  std::string eval_pred, eval_gt, eval_json_out;
  eval->add_option("--predictions", eval_pred, "Prediction JSONL")->required();
  eval->add_option("--ground-truth", eval_gt, "Ground-truth JSONL")->required();
  eval->add_option("--json-out", eval_json_out, "Write the JSON report here");

  // replay
  auto* replay = app.add_subcommand("replay", "End-to-end oracle run over annotations");
  std::string replay_annotations, replay_out_dir;
  double replay_noise = 0.0, replay_malformed = 0.0;
  std::uint64_t replay_seed = 0;
  int replay_retry = 2;
  SegFlags replay_seg;
  RewardFlags replay_reward;
  replay->add_option("--annotations", replay_annotations, "Annotation JSONL")->required();
  replay->add_option("--out-dir", replay_out_dir, "Output directory")->required();
  replay->add_option("--noise", replay_noise, "Oracle answer noise amplitude");
  replay->add_option("--malformed-rate", replay_malformed, "Oracle malformed-output rate");
  replay->add_option("--seed", replay_seed, "Fault-injection seed");
  replay->add_option("--retry-budget", replay_retry, "Extra attempts per turn");
  add_seg_flags(replay, replay_seg);
  add_reward_flags(replay, replay_reward);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service config JSON")->required();

  // reward-score
  auto* score = app.add_subcommand("reward-score", "One-shot reward computation");
  double score_p = 0.0, score_gt = 0.0;
  std::optional<double> score_p_prev, score_gt_prev;
  int score_n = 1, score_m = 0;
  std::string score_raw, score_raw_file;
  RewardFlags score_reward;
  score->add_option("--p", score_p, "Predicted progress")->required();
  score->add_option("--gt", score_gt, "Ground-truth progress")->required();
  score->add_option("--n", score_n, "Total steps")->required();
  score->add_option("--m", score_m, "Completed steps")->required();
  score->add_option("--p-prev", score_p_prev, "Previous predicted progress");
  score->add_option("--gt-prev", score_gt_prev, "Previous ground-truth progress");
  score->add_option("--raw-output", score_raw, "Raw model output to format-check");
  score->add_option("--raw-file", score_raw_file, "Read raw output from file");
  add_reward_flags(score, score_reward);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (label->parsed()) {
      return cmd_label(label_annotations, label_manifest, label_manifest_dir, label_seg,
                       label_out);
    }
    if (build->parsed()) {
      return cmd_build_dataset(build_annotations, build_out_dir, build_seg, build_distractor,
                               build_objects, build_seed, build_parallelism, build_shard,
                               build_backend, build_base_url, build_model, build_manifest,
                               build_manifest_dir);
    }
    if (eval->parsed()) return cmd_eval(eval_pred, eval_gt, eval_json_out);
    if (replay->parsed()) {
      return cmd_replay(replay_annotations, replay_out_dir, replay_seg, replay_reward,
                        replay_noise, replay_malformed, replay_seed, replay_retry);
    }
    if (serve->parsed()) return cmd_serve(serve_config);
    if (score->parsed()) {
      return cmd_reward_score(score_p, score_p_prev, score_gt, score_gt_prev, score_n, score_m,
                              score_reward, score_raw, score_raw_file);
    }
  } catch (const promon::TransportError& e) {
    print_error(std::string("transport_") + promon::to_string(e.category()), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error("error", e.what());
    return kExitRuntime;
  }
  return 0;
}
