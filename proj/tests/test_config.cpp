#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "caprl/common.hpp"
#include "caprl/config/config.hpp"
#include "caprl/pipeline/pipeline.hpp"

using namespace caprl;
using config::Config;

TEST_CASE("config parses sections, comments, and typed values") {
  const Config cfg = Config::parse_string(
      "# comment\n"
      "[trainer]\n"
      "learning_rate = 0.5\n"
      "max_iterations = 150\n"
      "; another comment\n"
      "[pipeline]\n"
      "env = skill_mix_game\n"
      "seed = 18446744073709551615\n"
      "resume = true\n");
  CHECK(cfg.get_double("trainer", "learning_rate", 0.0) == 0.5);
  CHECK(cfg.get_int("trainer", "max_iterations", 0) == 150);
  CHECK(cfg.get_string("pipeline", "env", "") == "skill_mix_game");
  CHECK(cfg.get_u64("pipeline", "seed", 0) == 18446744073709551615ull);
  CHECK(cfg.get_bool("pipeline", "resume", false));
  CHECK(cfg.get_int("trainer", "absent", 7) == 7);
  CHECK(cfg.has("trainer", "learning_rate"));
  CHECK_FALSE(cfg.has("trainer", "absent"));
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(Config::parse_string("key = outside_section\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("[s]\nnot a pair\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("[s]\nk = 1\nk = 2\n"), ConfigError);
}

TEST_CASE("typed getters are strict about the value format") {
  const Config cfg = Config::parse_string("[s]\nx = notanumber\ny = 1.5\n");
  CHECK_THROWS_AS(cfg.get_int("s", "x", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("s", "x", 0.0), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("s", "y", 0), ConfigError);  // 1.5 is not an int
  CHECK_THROWS_AS(cfg.get_bool("s", "y", false), ConfigError);
}

TEST_CASE("require_known flags unknown keys and sections") {
  const Config cfg = Config::parse_string("[trainer]\nlearning_rate = 0.1\ntypo_key = 3\n");
  CHECK_THROWS_AS(cfg.require_known({{"trainer", {"learning_rate"}}}), ConfigError);
  CHECK_NOTHROW(cfg.require_known({{"trainer", {"learning_rate", "typo_key"}}}));
  const Config other = Config::parse_string("[unknown_section]\nk = 1\n");
  CHECK_THROWS_AS(other.require_known({{"trainer", {"learning_rate"}}}), ConfigError);
}

TEST_CASE("parse_file round-trips and missing files fail") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "caprl_cfg_test.ini";
  {
    std::ofstream out(p);
    out << "[pipeline]\nseed = 9\n";
  }
  CHECK(Config::parse_file(p).get_u64("pipeline", "seed", 0) == 9);
  fs::remove(p);
  CHECK_THROWS_AS(Config::parse_file(p), ConfigError);
}

TEST_CASE("pipeline options come from config with schema checking") {
  const Config cfg = Config::parse_string(
      "[pipeline]\n"
      "seed = 3\n"
      "env = skill_mix_game\n"
      "eval_tasks = 50\n"
      "[trainer]\n"
      "learning_rate = 0.25\n"
      "max_iterations = 12\n");
  const pipeline::PipelineOptions opts = pipeline::pipeline_options_from_config(cfg);
  CHECK(opts.seed == 3);
  CHECK(opts.eval_tasks == 50);
  CHECK(opts.trainer.learning_rate == 0.25);
  CHECK(opts.trainer.max_iterations == 12);
  // Untouched keys keep their defaults.
  CHECK(opts.trainer.clip_epsilon == 0.2);
  CHECK(opts.analysis_runs == 10);

  const Config bad = Config::parse_string("[pipeline]\nlearningrate = 1\n");
  CHECK_THROWS_AS(pipeline::pipeline_options_from_config(bad), ConfigError);
}

TEST_CASE("trainer config validation rejects bad ranges") {
  grpo::TrainerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  grpo::TrainerConfig bad = cfg;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.group_size = 1;  // group-relative normalization needs >= 2
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.clip_epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
