#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "caprl/common.hpp"
#include "caprl/env/env.hpp"
#include "caprl/env/trajectory.hpp"

using namespace caprl;
using env::AgentAction;
using env::Step;
using env::StepRole;
using env::Trajectory;

namespace {

class CountdownEnv : public env::EnvState {
 public:
  void reset(std::uint64_t seed) override {
    clear_state();
    remaining_ = 2 + static_cast<int>(seed % 2);
  }
  std::string observe(int) const override { return "left " + std::to_string(remaining_); }
  void step(const std::optional<std::string>& action) override {
    require_active();
    if (!action) {
      finish_invalid(0);
      return;
    }
    if (--remaining_ == 0) finish(*action == "go" ? 1.0 : 0.5);
  }

 private:
  int remaining_ = 0;
};

}  // namespace

TEST_CASE("registry registers, looks up, and rejects duplicates") {
  env::EnvRegistry reg;
  env::EnvSpec spec;
  spec.name = "countdown";
  spec.action_extractor_id = "verbatim_token";
  reg.register_env(spec, [] { return std::make_unique<CountdownEnv>(); });
  CHECK(reg.contains("countdown"));
  CHECK_FALSE(reg.contains("missing"));
  CHECK(reg.spec("countdown").action_extractor_id == "verbatim_token");
  CHECK(reg.names() == std::vector<std::string>{"countdown"});
  CHECK_THROWS_AS(reg.register_env(spec, [] { return std::make_unique<CountdownEnv>(); }),
                  ProtocolError);
  CHECK_THROWS_AS(reg.spec("missing"), ProtocolError);
  CHECK_THROWS_AS(reg.make("missing"), ProtocolError);
  env::EnvSpec bad_ex = spec;
  bad_ex.name = "countdown2";
  bad_ex.action_extractor_id = "no_such_extractor";
  CHECK_THROWS_AS(reg.register_env(bad_ex, [] { return std::make_unique<CountdownEnv>(); }),
                  ProtocolError);
}

TEST_CASE("episode protocol: reset, finish, reward, step-after-done") {
  CountdownEnv e;
  e.reset(0);
  CHECK_FALSE(e.done());
  CHECK(e.observe(0) == "left 2");
  e.step(std::string("wait"));
  e.step(std::string("go"));
  CHECK(e.done());
  CHECK(e.rewards().at(0) == 1.0);
  CHECK_FALSE(e.invalid_player().has_value());
  CHECK_THROWS_AS(e.step(std::string("go")), ProtocolError);

  e.reset(0);
  e.step(std::nullopt);  // extractor produced nothing
  CHECK(e.done());
  CHECK(e.rewards().at(0) == 0.0);
  CHECK(e.invalid_player() == 0);
}

TEST_CASE("build_prompt prefixes roles and skips an empty system prompt") {
  const std::vector<Step> steps = {{StepRole::kObservation, "task here"},
                                   {StepRole::kAction, "try(1)"},
                                   {StepRole::kObservation, "result"}};
  CHECK(env::build_prompt("", steps) == "[obs] task here\n[act] try(1)\n[obs] result\n");
  const std::string with_sys = env::build_prompt("be brief", steps);
  CHECK(with_sys.substr(0, 8) == "be brief");
  CHECK(with_sys.find("[obs] task here") != std::string::npos);
}

TEST_CASE("verbatim_token extractor takes the first token") {
  const auto& ex = env::extractor("verbatim_token");
  CHECK(ex("  alpha bravo\n") == "alpha");
  CHECK(ex("one") == "one");
  CHECK_FALSE(ex("   \n\t ").has_value());
  CHECK_FALSE(ex("").has_value());
}

TEST_CASE("tool_call_v1 extractor finds the last call else trims a message") {
  const auto& ex = env::extractor("tool_call_v1");
  CHECK(ex("I will look it up: get_row({\"key\": \"a\"})") == "get_row({\"key\": \"a\"})");
  // Last call wins when several appear.
  const auto multi = ex("a({\"x\":1}) then b({\"y\":2})");
  REQUIRE(multi.has_value());
  CHECK(multi->substr(0, 2) == "b(");
  CHECK(ex("  just words  ") == "just words");
  CHECK_FALSE(ex("  \n ").has_value());
}

TEST_CASE("extractor registry rejects duplicates and unknown ids") {
  CHECK(env::has_extractor("tool_call_v1"));
  CHECK(env::has_extractor("verbatim_token"));
  CHECK_FALSE(env::has_extractor("nope"));
  CHECK_THROWS_AS(env::extractor("nope"), ProtocolError);
  CHECK_THROWS_AS(env::register_extractor(
                      "verbatim_token",
                      [](const std::string&) -> std::optional<std::string> { return std::nullopt; }),
                  ProtocolError);
}

TEST_CASE("parse_action splits tool calls from messages") {
  const AgentAction call = env::parse_action("update_row({\"id\": 3, \"name\": \"x\"})");
  CHECK(call.kind == AgentAction::Kind::kToolCall);
  CHECK(call.name == "update_row");
  CHECK(call.args["id"] == 3);
  const AgentAction msg = env::parse_action("the record was fixed");
  CHECK(msg.kind == AgentAction::Kind::kMessage);
  CHECK(msg.text == "the record was fixed");
  // Broken JSON args degrade to a message rather than throwing.
  const AgentAction broken = env::parse_action("update_row({bad json)");
  CHECK(broken.kind == AgentAction::Kind::kMessage);
}

TEST_CASE("trajectory JSONL round-trips bit-exactly") {
  namespace fs = std::filesystem;
  Trajectory t;
  t.task_id = "t-1";
  t.episode_seed = 12345;
  t.env_name = "countdown";
  t.steps = {{StepRole::kObservation, "left 2"}, {StepRole::kAction, "go"}};
  t.reward = 0.5;
  t.success = false;
  t.metadata = {{"family", "copy"}, {"target", "alpha"}};

  CHECK(t.action_text() == "go\n");
  CHECK(t.full_text() == "left 2\ngo\n");
  CHECK(t.action_count() == 1);

  const fs::path p = fs::temp_directory_path() / "caprl_traj_test.jsonl";
  CHECK(env::write_trajectories(p, {t, t}) == 2);
  const auto back = env::read_trajectories(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == t);
  CHECK(back[1] == t);
  fs::remove(p);
}

TEST_CASE("trajectory reader rejects malformed and mis-versioned records") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "caprl_traj_bad.jsonl";
  {
    std::ofstream out(p);
    out << trajectory_to_json(Trajectory{}).dump() << "\n";
    out << "{not json\n";
  }
  try {
    env::read_trajectories(p);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  {
    std::ofstream out(p);
    nlohmann::json j = trajectory_to_json(Trajectory{});
    j["schema_version"] = 999;
    out << j.dump() << "\n";
  }
  CHECK_THROWS_AS(env::read_trajectories(p), ProtocolError);
  fs::remove(p);
  CHECK_THROWS_AS(env::read_trajectories(p), ProtocolError);  // missing file
  // Blank lines are skipped, not errors.
  {
    std::ofstream out(p);
    out << "\n" << trajectory_to_json(Trajectory{}).dump() << "\n\n";
  }
  CHECK(env::read_trajectories(p).size() == 1);
  fs::remove(p);
}
