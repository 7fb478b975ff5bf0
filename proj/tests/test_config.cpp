#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "emcom/config.hpp"

using namespace emcom;

namespace {

std::string write_temp(const std::string& text) {
  static int counter = 0;
  std::string path = "/tmp/emcom_cfg_" + std::to_string(counter++) + ".json";
  std::ofstream os(path);
  os << text;
  return path;
}

}  // namespace

TEST_CASE("load_config: empty file gives all defaults") {
  const std::string path = write_temp("   \n  ");
  ExperimentConfig cfg = load_config(path);
  CHECK(cfg.seed == 1);
  CHECK(cfg.negotiation.episodes == 200000);
  CHECK(cfg.ring.cfg.goal_halfwidth == doctest::Approx(0.125));
  CHECK(cfg.ring.noise_sigma == doctest::Approx(0.1));
  CHECK(cfg.lead.cfg.arena.max_steps == 50);
  std::remove(path.c_str());
}

TEST_CASE("parse_config: unknown keys are rejected by full path") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"ring": {"nois_sigma": 0.1}})"),
                       doctest::Contains("ring.nois_sigma"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"bogus": 1})"), doctest::Contains("bogus"),
                       std::invalid_argument);
}

TEST_CASE("parse_config: constraint violations name the offending key") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"ring": {"noise_sigma": -1}})"),
                       doctest::Contains("ring.noise_sigma"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"negotiation": {"reward_push": 1.5}})"),
                       doctest::Contains("negotiation.reward_push"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"lead": {"goal_radius": 0.9}})"),
                       doctest::Contains("lead.goal_radius"), std::invalid_argument);
}

TEST_CASE("parse_config: type mismatches name the key") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"ring": {"episodes": "many"}})"),
                       doctest::Contains("ring.episodes"), std::invalid_argument);
}

TEST_CASE("config: load -> save -> load is a fixpoint") {
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "ring",
    "seed": 42,
    "ring": {"noise_sigma": 0.25, "episodes": 5000, "hidden": 12},
    "lead": {"init": "scratch", "spectrum_bins": 16}
  })");
  const std::string json1 = config_to_json(cfg);
  ExperimentConfig again = parse_config(json1);
  CHECK(config_equal(cfg, again));
  CHECK(config_to_json(again) == json1);
  CHECK(again.ring.noise_sigma == doctest::Approx(0.25));
  CHECK(again.lead.cfg.tone.bins == 16);
}

TEST_CASE("apply_override: dotted paths, unknown keys, bad values") {
  ExperimentConfig cfg;
  apply_override(cfg, "ring.noise_sigma=0.2");
  CHECK(cfg.ring.noise_sigma == doctest::Approx(0.2));
  apply_override(cfg, "seed=99");
  CHECK(cfg.seed == 99);
  apply_override(cfg, "lead.init=scratch");
  CHECK(cfg.lead.init == "scratch");
  CHECK_THROWS_WITH_AS(apply_override(cfg, "ring.bogus=3"), doctest::Contains("ring.bogus"),
                       std::invalid_argument);
  CHECK_THROWS_AS(apply_override(cfg, "ring.noise_sigma=-4"), std::invalid_argument);
  CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), std::invalid_argument);
}

TEST_CASE("config_resume_hash: masks episode budgets, tracks everything else") {
  ExperimentConfig a, b;
  b.ring.episodes = 123;
  b.negotiation.episodes = 77;
  CHECK(config_resume_hash(a) == config_resume_hash(b));
  b.ring.noise_sigma = 0.3;
  CHECK(config_resume_hash(a) != config_resume_hash(b));
  ExperimentConfig c;
  c.seed = 2;
  CHECK(config_resume_hash(a) != config_resume_hash(c));
}
