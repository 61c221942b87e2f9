// CLI surface checks: spawns the real binary and verifies each subcommand's
// observable contract (outputs, files, exit codes). Invoked as:
//   promon_cli_surface <path-to-cli>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "promon/json_io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;
int g_failures = 0;

void check(bool cond, const std::string& what) {
  if (cond) {
    std::cout << "[PASS] " << what << "\n";
  } else {
    std::cout << "[FAIL] " << what << "\n";
    ++g_failures;
  }
}

struct RunResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  const fs::path out = g_work / "stdout.txt";
  const fs::path err = g_work / "stderr.txt";
  const std::string cmd = "'" + g_cli + "' " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
  const int rc = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = rc == -1 ? -1 : WEXITSTATUS(rc);
  result.out = promon::io::read_text_file(out.string());
  result.err = promon::io::read_text_file(err.string());
  return result;
}

std::size_t count_lines(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

const char* kFourStep =
    R"({"task":"Make a cup of coffee","video_ref":"demo","steps":[{"desc":"walk","t_start":0,"t_end":10},{"desc":"pick","t_start":10,"t_end":20},{"desc":"fill","t_start":20,"t_end":30},{"desc":"serve","t_start":30,"t_end":40}]})";

// Five equal 4 s steps: the label at every integer timestamp is an integer,
// so the oracle's rounded answers match ground truth exactly.
const char* kLinear =
    R"({"task":"Assemble the shelf","video_ref":"linear","steps":[{"desc":"s1","t_start":0,"t_end":4},{"desc":"s2","t_start":4,"t_end":8},{"desc":"s3","t_start":8,"t_end":12},{"desc":"s4","t_start":12,"t_end":16},{"desc":"s5","t_start":16,"t_end":20}]})";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: promon_cli_surface <cli-path>\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = fs::temp_directory_path() / "promon-cli-surface";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const fs::path fixture = g_work / "fixture.jsonl";
  std::ofstream(fixture) << kFourStep << "\n";
  const fs::path linear = g_work / "linear.jsonl";
  std::ofstream(linear) << kLinear << "\n";

  // label: 40 s fixture -> 10 rows with the documented keys
  {
    const fs::path out = g_work / "labeled.jsonl";
    const RunResult r =
        run("label --annotations '" + fixture.string() + "' --out '" + out.string() + "'");
    check(r.exit_code == 0, "label exits 0");
    check(count_lines(out.string()) == 10, "label writes 10 snippet rows");
    std::ifstream in(out);
    std::string first;
    std::getline(in, first);
    const json row = json::parse(first);
    check(row.contains("traj_id") && row.contains("turn") && row.contains("t_begin") &&
              row.contains("t_end") && row.contains("frames") && row.contains("progress"),
          "label rows carry the documented keys");
    check(row["frames"].size() == 4, "label rows carry K frame references");
  }

  // replay + eval: the perfect-oracle run scores a zero-error table
  {
    const fs::path out_dir = g_work / "replay";
    RunResult r = run("replay --annotations '" + linear.string() + "' --out-dir '" +
                      out_dir.string() + "'");
    check(r.exit_code == 0, "replay exits 0");
    check(r.out.find("p_mae") != std::string::npos, "replay prints the metrics table");
    check(fs::exists(out_dir / "transcripts" / "linear.jsonl"), "replay writes transcripts");

    r = run("eval --predictions '" + (out_dir / "predictions.jsonl").string() +
            "' --ground-truth '" + (out_dir / "ground_truth.jsonl").string() + "' --json-out '" +
            (g_work / "report.json").string() + "'");
    check(r.exit_code == 0, "eval exits 0");
    check(r.out.find("0.0000") != std::string::npos, "eval reports the zero-error table");
    const json report = json::parse(promon::io::read_text_file((g_work / "report.json").string()));
    check(report["p_mae"].get<double>() <= 1e-9, "eval JSON p_mae is zero");
    check(report["bin"].get<double>() == 1.0, "eval JSON bin is 1.0");
  }

  // build-dataset: stats on stdout, shards + manifest + stats on disk
  {
    const fs::path out_dir = g_work / "dataset";
    const RunResult r = run("build-dataset --annotations '" + fixture.string() +
                            "' --out-dir '" + out_dir.string() + "' --seed 3");
    check(r.exit_code == 0, "build-dataset exits 0");
    const json stats = json::parse(r.out);
    check(stats["tuples"] == 10, "build-dataset emits 10 tuples");
    check(fs::exists(out_dir / "manifest.json") && fs::exists(out_dir / "stats.json"),
          "build-dataset writes manifest and stats");
  }

  // reward-score: the worked 1.4 example
  {
    const RunResult r = run("reward-score --p 45 --gt 40 --n 2 --m 0 --p-prev 9 --gt-prev 20");
    check(r.exit_code == 0, "reward-score exits 0");
    const json body = json::parse(r.out);
    check(std::abs(body["r_overall"].get<double>() - 1.4) < 1e-9,
          "reward-score reports r_overall 1.4");
    check(body["config"]["delta1"] == 20.0, "reward-score echoes the config");
  }

  // error contract: bad serve config exits 2 and names the field
  {
    const fs::path cfg = g_work / "bad.json";
    std::ofstream(cfg) << R"({"idle_timeout_seconds": 0})";
    const RunResult r = run("serve --config '" + cfg.string() + "'");
    check(r.exit_code == 2, "serve with a bad config exits 2");
    const json err = json::parse(r.err);
    check(err["error"]["message"].get<std::string>().find("idle_timeout_seconds") !=
              std::string::npos,
          "serve error names the offending field");
  }

  // error contract: usage errors exit 2 with a single JSON line
  {
    const RunResult r = run("label");
    check(r.exit_code == 2, "missing required flags exit 2");
    check(!json::parse(r.err, nullptr, false).is_discarded(),
          "usage errors are machine-parseable JSON");
  }

  // error contract: runtime failures exit 1
  {
    const RunResult r = run("eval --predictions /nonexistent.jsonl --ground-truth '" +
                            linear.string() + "'");
    check(r.exit_code == 1, "runtime failures exit 1");
  }

  // invalid annotations are rejected per line; an empty file is an error
  {
    const fs::path bad = g_work / "bad.jsonl";
    std::ofstream(bad) << "";
    const RunResult r = run("label --annotations '" + bad.string() + "' --out '" +
                            (g_work / "na.jsonl").string() + "'");
    check(r.exit_code == 1, "empty annotation file is an error");
  }

  if (g_failures > 0) std::cout << g_failures << " checks failed\n";
  return g_failures == 0 ? 0 : 1;
}
