#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "emcom/runner.hpp"

using namespace emcom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::path("/tmp/emcom_runs") / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_negotiation(const std::string& dir) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Negotiation;
  cfg.seed = 7;
  cfg.out_dir = dir;
  cfg.metrics_window = 50;
  cfg.transcript_every = 100;
  cfg.negotiation.episodes = 400;
  cfg.negotiation.cfg.hidden = 6;
  cfg.negotiation.eval_placements = 2;
  return cfg;
}

ExperimentConfig small_ring(const std::string& dir) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Ring;
  cfg.seed = 3;
  cfg.out_dir = dir;
  cfg.metrics_window = 50;
  cfg.ring.episodes = 300;
  cfg.ring.cfg.hidden = 5;
  cfg.ring.eval_trials = 20;
  cfg.ring.atlas_resolution = 16;
  return cfg;
}

}  // namespace

TEST_CASE("run: identical config and seed give byte-identical metrics CSVs") {
  const fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
  ExperimentConfig c1 = small_negotiation(d1.string());
  ExperimentConfig c2 = small_negotiation(d2.string());
  RunRecord r1 = run(c1, Job::NegotiationTrain);
  RunRecord r2 = run(c2, Job::NegotiationTrain);
  CHECK(r1.completed);
  CHECK(r2.completed);
  CHECK(slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv"));
  CHECK(slurp(d1 / "transcripts.jsonl") == slurp(d2 / "transcripts.jsonl"));
  CHECK(slurp(d1 / "checkpoint/nets.ckpt") == slurp(d2 / "checkpoint/nets.ckpt"));
}

TEST_CASE("run: an interrupted run resumes from the checkpoint to identical artifacts") {
  const fs::path full_dir = fresh_dir("resume_full"), cut_dir = fresh_dir("resume_cut");
  ExperimentConfig full_cfg = small_ring(full_dir.string());
  ExperimentConfig cut_cfg = small_ring(cut_dir.string());

  RunRecord full = run(full_cfg, Job::RingTrain);
  CHECK(full.completed);
  CHECK(full.episodes_done == 300);

  // interrupt mid-run: progress past the last checkpoint is lost
  RunRecord partial = run(cut_cfg, Job::RingTrain, 137);
  CHECK_FALSE(partial.completed);
  CHECK(fs::exists(cut_dir / "checkpoint/state.json"));
  CHECK_FALSE(fs::exists(cut_dir / "metrics.csv"));

  RunRecord resumed = run(cut_cfg, Job::RingTrain);
  CHECK(resumed.completed);
  CHECK(resumed.episodes_done == 300);
  CHECK(slurp(full_dir / "metrics.csv") == slurp(cut_dir / "metrics.csv"));
  CHECK(slurp(full_dir / "checkpoint/nets.ckpt") == slurp(cut_dir / "checkpoint/nets.ckpt"));
}

TEST_CASE("run: a checkpoint from a different config is refused") {
  const fs::path dir = fresh_dir("clash");
  ExperimentConfig cfg = small_ring(dir.string());
  run(cfg, Job::RingTrain, 137);
  cfg.ring.noise_sigma = 0.5;  // same dir, different physics
  CHECK_THROWS_AS(run(cfg, Job::RingTrain), std::runtime_error);
}

TEST_CASE("run: seed sweep produces disjoint run records") {
  std::vector<std::string> csvs;
  for (int seed = 1; seed <= 5; ++seed) {
    const fs::path dir = fresh_dir("sweep" + std::to_string(seed));
    ExperimentConfig cfg = small_negotiation(dir.string());
    cfg.seed = seed;
    cfg.negotiation.episodes = 100;
    RunRecord rec = run(cfg, Job::NegotiationTrain);
    CHECK(rec.completed);
    CHECK(rec.run_id == "negotiation-s" + std::to_string(seed));
    csvs.push_back(slurp(dir / "metrics.csv"));
  }
  for (size_t i = 0; i < csvs.size(); ++i)
    for (size_t j = i + 1; j < csvs.size(); ++j) CHECK(csvs[i] != csvs[j]);
}

TEST_CASE("emit_plotdata: learning curve, transcript tables, ring atlas") {
  const fs::path ndir = fresh_dir("plots_nego");
  ExperimentConfig ncfg = small_negotiation(ndir.string());
  run(ncfg, Job::NegotiationTrain);
  auto nfiles = emit_plotdata(ndir.string());
  REQUIRE(nfiles.size() == 2);

  // learning curve rows == metric windows (400 episodes / 50 window)
  {
    std::ifstream is(ndir / "learning_curve.csv");
    std::string line;
    int rows = -1;  // header
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 8);
  }
  // transcript table: per transcript, 1 agent row + 3 signal rows + 1 action row
  {
    std::ifstream is(ndir / "transcript_tables.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "episode,row,seat0,seat1,seat2,seat3");
    int rows = 0, signal_rows = 0, action_rows = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      ++rows;
      if (line.find(",signal#") != std::string::npos) ++signal_rows;
      if (line.find(",action") != std::string::npos) ++action_rows;
    }
    CHECK(rows == 4 * 5);  // 4 transcripts at cadence 100 over 400 episodes
    CHECK(signal_rows == 3 * 4);
    CHECK(action_rows == 4);
  }

  const fs::path rdir = fresh_dir("plots_ring");
  ExperimentConfig rcfg = small_ring(rdir.string());
  run(rcfg, Job::RingTrain);
  emit_plotdata(rdir.string());
  {
    std::ifstream is(rdir / "atlas.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "x,s1,s2");
    int rows = 0;
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    CHECK(rows == rcfg.ring.atlas_resolution);
  }
}

TEST_CASE("emit_plotdata: missing artifacts are reported by name") {
  const fs::path dir = fresh_dir("plots_missing");
  fs::create_directories(dir);
  CHECK_THROWS_WITH_AS(emit_plotdata(dir.string()), doctest::Contains("metrics.csv"),
                       std::runtime_error);
}

TEST_CASE("write_negotiation_eval: table and stubbornness files") {
  NegotiationConfig nc;
  nc.hidden = 5;
  AgentPool pool = make_pool(nc, 5);
  const fs::path dir = fresh_dir("nego_eval");
  auto files = write_negotiation_eval(pool, 2, 11, dir.string());
  std::ifstream is(files.table_csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "combination_id,agents,placements,successes,success_rate");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 70);

  std::ifstream ss(files.stubbornness_csv);
  std::getline(ss, line);
  CHECK(line == "agent,stubbornness,seated_episodes");
  rows = 0;
  while (std::getline(ss, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 8);
}
