#include <doctest.h>

#include <algorithm>

#include "caprl/common.hpp"
#include "caprl/synth/sdr.hpp"
#include "caprl/synth/tools.hpp"

using namespace caprl;
using namespace caprl::synth;

namespace {

std::string all_keywords_message(const Scenario& s) {
  std::string msg = "Here is what I found:";
  for (const auto& kw : s.communicate_info) {
    msg += " ";
    msg += kw;
  }
  return msg;
}

std::uint64_t find_seed(bool want_mutation) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    if (generate_sdr_scenario(seed).expects_mutation == want_mutation) return seed;
  }
  FAIL("no scenario with expects_mutation=", want_mutation, " in seeds 0..199");
  return 0;
}

}  // namespace

TEST_CASE("scenario generation is seed-deterministic and well-formed") {
  const Scenario a = generate_sdr_scenario(11);
  const Scenario b = generate_sdr_scenario(11);
  CHECK(scenario_hash(a) == scenario_hash(b));
  CHECK(scenario_hash(a) != scenario_hash(generate_sdr_scenario(12)));

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Scenario s = generate_sdr_scenario(seed);
    CHECK_FALSE(s.initial_message.empty());
    CHECK_FALSE(s.communicate_info.empty());
    CHECK_FALSE(s.database.empty());
    CHECK_FALSE(s.reveal_script.empty());
    if (s.expects_mutation) CHECK(s.expected_tool.has_value());
  }
}

TEST_CASE("gold replay mutates a copy and leaves info tasks untouched") {
  const Scenario mut = generate_sdr_scenario(find_seed(true));
  const nlohmann::json after = replay_gold_action(mut);
  CHECK(db_hash(after) != db_hash(mut.database));
  CHECK(db_hash(mut.database) == db_hash(generate_sdr_scenario(mut.seed).database));

  const Scenario info = generate_sdr_scenario(find_seed(false));
  if (!info.expected_tool) {
    CHECK(db_hash(replay_gold_action(info)) == db_hash(info.database));
  }
}

TEST_CASE("mutation rewards are tiered 1.0 / 0.3 / 0.0") {
  const Scenario s = generate_sdr_scenario(find_seed(true));
  const nlohmann::json gold_db = replay_gold_action(s);

  const RewardBreakdown full = evaluate_sdr_reward({all_keywords_message(s)}, s, gold_db);
  CHECK(full.total == 1.0);
  full.validate();

  const RewardBreakdown db_only = evaluate_sdr_reward({"done."}, s, gold_db);
  CHECK(db_only.total == 0.3);
  CHECK(db_only.components.at("db_match") == 1.0);
  CHECK(db_only.components.at("comm") == 0.0);

  const RewardBreakdown nothing = evaluate_sdr_reward({all_keywords_message(s)}, s, s.database);
  CHECK(nothing.total == 0.0);  // wrong database loses everything, even with the words right
}

TEST_CASE("info rewards are all-or-nothing on communicated keywords") {
  const Scenario s = generate_sdr_scenario(find_seed(false));
  CHECK(evaluate_sdr_reward({all_keywords_message(s)}, s, s.database).total == 1.0);
  CHECK(evaluate_sdr_reward({"let me check"}, s, s.database).total == 0.0);
  // Keyword matching is whitespace- and case-insensitive.
  std::string shouted = all_keywords_message(s);
  std::transform(shouted.begin(), shouted.end(), shouted.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  CHECK(evaluate_sdr_reward({shouted}, s, s.database).total == 1.0);
}

TEST_CASE("scripted user walks the reveal script then hangs up") {
  const Scenario s = generate_sdr_scenario(find_seed(false));
  ScriptedUserSim sim(s);
  std::vector<std::string> said{"hello"};
  for (std::size_t i = 0; i < s.reveal_script.size(); ++i) {
    CHECK(sim.respond(said) == s.reveal_script[i]);
  }
  const std::string bail = sim.respond(said);
  CHECK(bail.find(kStopToken) != std::string::npos);  // script exhausted

  ScriptedUserSim sim2(s);
  const std::string stop = sim2.respond({all_keywords_message(s)});
  CHECK(stop.find(kStopToken) != std::string::npos);  // satisfied immediately
}

TEST_CASE("tool executor handles lookups, mutations, and bad input without throwing") {
  const Scenario s = generate_sdr_scenario(find_seed(true));
  nlohmann::json db = s.database;

  const ToolResult unknown = execute_tool("warp_drive", {}, db);
  CHECK_FALSE(unknown.ok);
  const ToolResult missing_arg = execute_tool("get_user_details", nlohmann::json::object(), db);
  CHECK_FALSE(missing_arg.ok);
  CHECK(missing_arg.text.find("user_id") != std::string::npos);
  CHECK(db_hash(db) == db_hash(s.database));  // failures leave the database alone

  REQUIRE(s.expected_tool.has_value());
  const ToolResult gold = execute_tool(s.expected_tool->name, s.expected_tool->args, db);
  CHECK(gold.ok);
  CHECK(db_hash(db) == db_hash(replay_gold_action(s)));  // in-place mutation matches replay

  const auto names = known_tools();
  CHECK(std::is_sorted(names.begin(), names.end()));
  CHECK(std::find(names.begin(), names.end(), "cancel_reservation") != names.end());
  CHECK(std::find(names.begin(), names.end(), s.expected_tool->name) != names.end());
}

TEST_CASE("environment runs a full dialogue to the gold outcome") {
  const std::uint64_t seed = find_seed(true);
  SdrEnv env(scripted_user_factory());
  env.reset(seed);
  CHECK(env.observe(0) == env.scenario().initial_message);
  CHECK_THROWS_AS(env.observe(1), ProtocolError);

  const auto& sc = env.scenario();
  REQUIRE(sc.expected_tool.has_value());
  env.step(sc.expected_tool->name + "(" + sc.expected_tool->args.dump() + ")");
  CHECK_FALSE(env.done());  // tool turns keep the episode alive

  env.step(all_keywords_message(sc));
  REQUIRE(env.done());
  CHECK(env.rewards().at(0) == 1.0);
  CHECK(env.episode_tags().at("expects_mutation") == "true");

  // Invalid action path.
  env.reset(seed);
  env.step(std::nullopt);
  CHECK(env.done());
  CHECK(env.rewards().at(0) == 0.0);
  CHECK(env.invalid_player() == 0);
}

TEST_CASE("environment spec matches the registered contract") {
  const env::EnvSpec spec = sdr_spec();
  CHECK(spec.name == "structured_data_game");
  CHECK(spec.action_extractor_id == "tool_call_v1");
  CHECK(spec.success_threshold == 1.0);
  CHECK_FALSE(spec.system_prompt.empty());
}
