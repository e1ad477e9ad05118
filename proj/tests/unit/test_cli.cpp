#include "doctest.h"
#include "oracles.hpp"

#include "vica/budget.hpp"
#include "vica/evalkit/judge.hpp"
#include "vica/kv_document.hpp"
#include "vica/numerics/random.hpp"

#include <cstdlib>
#include <map>

using namespace vica;
namespace fs = std::filesystem;
using oracle::run;

namespace {

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    files[e.path().filename().string()] = oracle::slurp(e.path());
  }
  return files;
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Description and offline response fixtures for `n` videos.
void write_judge_fixtures(const fs::path& desc, const fs::path& responses, int n) {
  for (int i = 0; i < n; ++i) {
    const std::string id = "clip" + std::to_string(i);
    oracle::spit(desc / (id + ".json"),
                 R"({"A": "a red ball", "B": "a ball", "C": "red", "D": "a red ball rolls left"})");
    eval::JudgeScores s{{i % 11, (i + 3) % 11, (2 * i) % 11, 10 - i % 11}};
    oracle::spit(responses / (id + ".txt"), "Thoughts.\n" + eval::format_judge_scores(s));
  }
}

} // namespace

TEST_CASE("plan with defaults") {
  const auto dir = oracle::scratch("plan-default");
  const auto r = run({"plan", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("13,440") != std::string::npos);
  CHECK(r.out.find("8,704") != std::string::npos);
  CHECK(r.out.find("1.54") != std::string::npos);
  CHECK(fs::exists(dir / "plan.txt"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("plan under a budget") {
  const auto dir = oracle::scratch("plan-budget");
  const auto none = run({"plan", "--budget", "13440", "--out", dir.string()});
  CHECK(none.code == 0);
  CHECK(none.out.find("no feasible config") != std::string::npos);

  const auto sweep = run({"plan", "--budget", "22144", "--sweep", "sweep.csv", "--out", dir.string()});
  CHECK(sweep.code == 0);
  const auto expected = budget::enumerate_configs(22144, budget::EncoderGeometry::full_scale_flat(),
                                                  budget::EncoderGeometry::full_scale_hier(), 64)
                            .size();
  CHECK(line_count(oracle::slurp(dir / "sweep.csv")) == expected + 1);
}

TEST_CASE("config document overrides flags") {
  const auto dir = oracle::scratch("plan-doc");
  oracle::spit(dir / "cfg.txt", "n_hiera = 64\n");
  const auto r = run({"plan", "--n-hiera", "8", "--config", (dir / "cfg.txt").string(), "--out",
                      (dir / "out").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("17,408") != std::string::npos);

  oracle::spit(dir / "bad.txt", "n_hiera = 1\nnot_a_key = 3\n");
  CHECK(run({"plan", "--config", (dir / "bad.txt").string(), "--out", (dir / "o2").string()}).code == 2);
}

TEST_CASE("run agrees with plan on random configurations") {
  const auto dir = oracle::scratch("run-agree");
  nx::Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    auto cfg = budget::TokenBudgetConfig::toy_default();
    cfg.n_total = rng.integer(1, 4);
    cfg.n_hiera = rng.integer(0, cfg.n_total);
    cfg.s_stage = static_cast<int>(rng.integer(1, 4));
    cfg.s_pool = rng.integer(1, budget::grid_side(cfg.geom_hier, cfg.s_stage));
    cfg.flat_pool = rng.integer(1, 6);
    const auto doc_path = dir / ("cfg" + std::to_string(trial) + ".txt");
    std::string doc;
    const auto cfg_doc = budget::config_to_document(cfg);
    for (const auto& [k, v] : cfg_doc.entries()) doc += k + " = " + v + "\n";
    oracle::spit(doc_path, doc);

    const auto p = run({"plan", "--config", doc_path.string(), "--out", (dir / "p").string()});
    const auto r = run({"run", "--config", doc_path.string(), "--frame-size", "32", "--seed",
                        std::to_string(trial), "--out", (dir / "r").string()});
    CAPTURE(trial);
    CAPTURE(r.err);
    REQUIRE(p.code == 0);
    REQUIRE(r.code == 0);
    const std::string table = budget::render_table(cfg, budget::compute_budget(cfg));
    CHECK(p.out.rfind(table, 0) == 0);
    CHECK(r.out.find(table) != std::string::npos);
    CHECK(r.out.find("plan agreement: exact") != std::string::npos);
  }
}

TEST_CASE("run without the hierarchical stream and as a dry run") {
  const auto dir = oracle::scratch("run-misc");
  const auto empty = run({"run", "--n-hiera", "0", "--text", "hello", "--out", dir.string()});
  CHECK(empty.code == 0);
  CHECK(empty.out.find("plan agreement: exact") != std::string::npos);
  CHECK(empty.out.find("decode loss") != std::string::npos);

  const auto dry = run({"run", "--dry-run", "--out", dir.string()});
  CHECK(dry.code == 0);
  CHECK(dry.out.find("(64, 27, 27, 1152)") != std::string::npos);
  CHECK(dry.out.find("(32, 32, 32, 896)") != std::string::npos);
  CHECK(dry.out.find("(22144, 16)") != std::string::npos);
  CHECK(dry.out.find("plan agreement") == std::string::npos);

  CHECK(run({"run", "--s-stage", "9", "--out", dir.string()}).code == 2);
  CHECK(run({"run", "--frames", "1", "--n-total", "4", "--out", dir.string()}).code == 2);
}

TEST_CASE("train writes a loss curve and a checkpoint") {
  const auto dir = oracle::scratch("train");
  const std::vector<std::string> args{"train", "--stage", "stage-1", "--steps", "3", "--samples", "4",
                                      "--frames", "2", "--frame-size", "32", "--batch", "2"};
  auto a = args;
  a.insert(a.end(), {"--out", (dir / "a").string()});
  const auto r = run(a);
  CHECK(r.code == 0);
  const std::string loss = oracle::slurp(dir / "a" / "loss.csv");
  CHECK(loss.rfind("step,loss\n", 0) == 0);
  CHECK(line_count(loss) == 4);
  CHECK(fs::exists(dir / "a" / "checkpoint.vckp"));

  auto resumed = args;
  resumed.insert(resumed.end(), {"--init", (dir / "a" / "checkpoint.vckp").string(), "--out",
                                 (dir / "b").string()});
  CHECK(run(resumed).code == 0);

  CHECK(run({"train", "--stage", "stage-7", "--out", (dir / "c").string()}).code == 2);
  CHECK(run({"train", "--steps", "0", "--out", (dir / "c").string()}).code == 2);
}

TEST_CASE("score reproduces the hand-computed table") {
  const auto dir = oracle::scratch("score");
  const auto r = run({"score", oracle::fixture("predictions_small.jsonl"), "--method", "fixture",
                      "--out", dir.string()});
  CHECK(r.code == 0);
  const std::string md = oracle::slurp(dir / "report.md");
  CHECK(md.find("| fixture | 65.6 | 90.0 | 0.0 | 100.0 | 60.0 | 75.0 | 50.0 | 50.0 | 100.0 |") !=
        std::string::npos);
  CHECK(oracle::slurp(dir / "report.csv").find("average,65.625,14") != std::string::npos);

  oracle::spit(dir / "one.jsonl",
               R"({"task": "obj_count", "question_id": "x", "kind": "numeric", "predicted": 9, "gold": 10})"
               "\n");
  const auto single = run({"score", (dir / "one.jsonl").string(), "--out", (dir / "one").string()});
  CHECK(single.code == 0);
  CHECK(single.err.find("vica: warning:") != std::string::npos);
  CHECK(line_count(oracle::slurp(dir / "one" / "warnings.txt")) == 7);

  oracle::spit(dir / "broken.jsonl", "{\n");
  const auto broken = run({"score", (dir / "broken.jsonl").string(), "--out", (dir / "b").string()});
  CHECK(broken.code == 3);
  CHECK(broken.err.find("line 1") != std::string::npos);
  CHECK(line_count(broken.err) == 1);
  CHECK(run({"score", (dir / "missing.jsonl").string(), "--out", (dir / "m").string()}).code == 3);
}

TEST_CASE("curve") {
  const auto dir = oracle::scratch("curve");
  const std::string f = oracle::fixture("predictions_small.jsonl");
  const auto r = run({"curve", "--point", "0.5:" + f, "--point", "1.0:" + f, "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(line_count(oracle::slurp(dir / "curve.csv")) == 3);
  CHECK(run({"curve", "--point", "1.0:" + f, "--point", "0.5:" + f, "--out", dir.string()}).code == 3);
}

TEST_CASE("judge offline aggregates fixture scores") {
  const auto dir = oracle::scratch("judge");
  write_judge_fixtures(dir / "desc", dir / "responses", 12);
  const auto r = run({"judge", "--descriptions", (dir / "desc").string(), "--offline",
                      (dir / "responses").string(), "--out", (dir / "out").string()});
  CHECK(r.code == 0);
  CAPTURE(r.err);
  std::array<double, 4> sum{};
  for (int i = 0; i < 12; ++i) {
    sum[0] += i % 11;
    sum[1] += (i + 3) % 11;
    sum[2] += (2 * i) % 11;
    sum[3] += 10 - i % 11;
  }
  const std::string csv = oracle::slurp(dir / "out" / "aggregate.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "model,mean_score,videos");
  for (int k = 0; k < 4; ++k) {
    std::getline(in, line);
    const auto c1 = line.find(',');
    const auto c2 = line.rfind(',');
    CHECK(line.substr(0, c1) == std::string(1, "ABCD"[k]));
    CHECK(std::abs(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) - sum[static_cast<std::size_t>(k)] / 12.0) <
          1e-12);
    CHECK(line.substr(c2 + 1) == "12");
  }
  CHECK(line_count(oracle::slurp(dir / "out" / "scores.csv")) == 13);
  CHECK(line_count(oracle::slurp(dir / "out" / "audit.jsonl")) == 12);

  fs::remove(dir / "responses" / "clip3.txt");
  CHECK(run({"judge", "--descriptions", (dir / "desc").string(), "--offline",
             (dir / "responses").string(), "--out", (dir / "out2").string()})
            .code == 3);
}

TEST_CASE("judge service failures map to exit code 4") {
  const auto dir = oracle::scratch("judge-online");
  write_judge_fixtures(dir / "desc", dir / "unused", 1);
  ::setenv("JUDGE_API_KEY", "test-key", 1);
  ::setenv("JUDGE_ENDPOINT", "http://127.0.0.1:9/v1/chat/completions", 1);
  ::unsetenv("JUDGE_OFFLINE_DIR");
  const auto r = run({"judge", "--descriptions", (dir / "desc").string(), "--out", (dir / "out").string()});
  CHECK(r.code == 4);
  CHECK(r.err.find("[transport]") != std::string::npos);
  ::unsetenv("JUDGE_API_KEY");
  ::unsetenv("JUDGE_ENDPOINT");
  CHECK(run({"judge", "--descriptions", (dir / "desc").string(), "--out", (dir / "out").string()}).code ==
        2);
}

TEST_CASE("every subcommand documents its flags") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"plan", {"--config", "--budget", "--sweep", "--ratio-precision", "--out", "--n-total",
                "--n-hiera", "--s-stage", "--s-pool", "--flat-pool"}},
      {"run", {"--config", "--seed", "--frames", "--frame-size", "--dry-run", "--text", "--out",
               "--n-total", "--n-hiera", "--s-stage", "--s-pool", "--flat-pool"}},
      {"train", {"--config", "--stage", "--steps", "--batch", "--seed", "--samples", "--frames",
                 "--frame-size", "--lr", "--init", "--out"}},
      {"score", {"--config", "--method", "--out"}},
      {"curve", {"--point", "--config", "--out"}},
      {"judge", {"--descriptions", "--offline", "--parallel", "--out"}},
  };
  for (const auto& [cmd, opts] : flags) {
    const auto r = run({cmd, "--help"});
    CAPTURE(cmd);
    CHECK(r.code == 0);
    for (const auto& o : opts) CHECK(r.out.find(o) != std::string::npos);
  }
  const auto top = run({"--help"});
  CHECK(top.code == 0);
  for (const auto& [cmd, opts] : flags) CHECK(top.out.find(cmd) != std::string::npos);
  CHECK(run({"--version"}).out.find("1.0.0") != std::string::npos);
}

TEST_CASE("usage errors") {
  const auto none = run({});
  CHECK(none.code == 2);
  const auto unknown = run({"plan", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.rfind("vica: usage error:", 0) == 0);
  CHECK(run({"plan", "--n-hiera", "99", "--out", oracle::scratch("usage").string()}).code == 2);
  CHECK(cli::exit_code_for(ErrorCode::kGeometry) == 2);
  CHECK(cli::exit_code_for(ErrorCode::kService) == 4);
  CHECK(cli::exit_code_for(ErrorCode::kDivergence) == 3);
}

TEST_CASE("identical commands produce identical artifacts") {
  const auto dir = oracle::scratch("determinism");
  write_judge_fixtures(dir / "desc", dir / "responses", 5);
  const std::vector<std::vector<std::string>> commands{
      {"plan", "--budget", "20000", "--sweep", "s.csv"},
      {"run", "--seed", "7", "--text", "abc"},
      {"train", "--stage", "base", "--steps", "2", "--samples", "4", "--frames", "2",
       "--frame-size", "32", "--seed", "5"},
      {"score", oracle::fixture("predictions_small.jsonl")},
      {"judge", "--descriptions", (dir / "desc").string(), "--offline", (dir / "responses").string()},
  };
  int i = 0;
  for (const auto& cmd : commands) {
    CAPTURE(cmd[0]);
    const auto a = dir / (std::to_string(i) + "a");
    const auto b = dir / (std::to_string(i) + "b");
    ++i;
    auto ca = cmd, cb = cmd;
    ca.insert(ca.end(), {"--out", a.string()});
    cb.insert(cb.end(), {"--out", b.string()});
    REQUIRE(run(ca).code == 0);
    REQUIRE(run(cb).code == 0);
    CHECK(oracle::slurp(a / "manifest.json") == oracle::slurp(b / "manifest.json"));
    CHECK(read_dir(a) == read_dir(b));
    // The manifest hashes every other file it sits beside.
    const std::string manifest = oracle::slurp(a / "manifest.json");
    for (const auto& [name, bytes] : read_dir(a)) {
      if (name == "manifest.json") continue;
      CHECK(manifest.find(cli::sha256_hex(bytes)) != std::string::npos);
    }
  }
}

TEST_CASE("sha256") {
  CHECK(cli::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(cli::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
