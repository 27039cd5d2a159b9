#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "caprl/env/env.hpp"
#include "caprl/gateway/gateway.hpp"
#include "caprl/synth/scenario.hpp"

namespace caprl::synth {

// Episode terminator. Any user-simulator reply containing this token ends
// the episode and triggers reward evaluation.
inline constexpr std::string_view kStopToken = "###STOP###";

// A user simulator drives the customer side of the dialogue. respond() gets
// every agent message so far (latest last) and returns the next user turn.
class UserSimulator {
 public:
  virtual ~UserSimulator() = default;
  virtual std::string respond(const std::vector<std::string>& agent_messages) = 0;
};

using UserSimFactory = std::function<std::unique_ptr<UserSimulator>(const Scenario&)>;

// Deterministic simulator used by default: walks the scenario's reveal
// script, and stops once every communicate_info keyword has appeared in the
// agent's messages (or the script runs out).
class ScriptedUserSim : public UserSimulator {
 public:
  explicit ScriptedUserSim(Scenario scenario);
  std::string respond(const std::vector<std::string>& agent_messages) override;

 private:
  Scenario scenario_;
  std::size_t cursor_ = 0;
};

UserSimFactory scripted_user_factory();

// LLM-backed simulator: plays the persona in scenario.user_system_prompt via
// a gateway. Appends the stop token itself when the model produces one.
class LlmUserSim : public UserSimulator {
 public:
  LlmUserSim(gateway::Gateway* gw, std::string model, Scenario scenario, int max_turns = 12);
  std::string respond(const std::vector<std::string>& agent_messages) override;

 private:
  gateway::Gateway* gw_;
  std::string model_;
  Scenario scenario_;
  int max_turns_;
  int turns_ = 0;
  std::vector<std::string> replies_;
};

UserSimFactory llm_user_factory(gateway::Gateway* gw, std::string model);

struct SdrOptions {
  std::vector<Domain> domains = {Domain::kAirline, Domain::kRetail};
  std::vector<std::string> task_types = {"conditional_fallback", "cross_entity_match",
                                         "progressive_disclosure"};
};

// Seed-deterministic scenario: synthetic database with the gold entity plus
// at least three distractors, the opening user message, the gold action and
// the keywords the agent must communicate back.
Scenario generate_sdr_scenario(std::uint64_t seed, const SdrOptions& opts = {});

// Applies the scenario's expected tool to a fresh copy of its database and
// returns the mutated copy (the database unchanged when there is no expected
// tool). Throws ProtocolError if the gold action itself fails.
nlohmann::json replay_gold_action(const Scenario& s);

// Tiered outcome score. Mutation tasks: 1.0 when the final database matches
// the gold replay and every keyword was communicated, 0.3 on database match
// alone, else 0.0. Info tasks: 1.0 iff every keyword was communicated.
RewardBreakdown evaluate_sdr_reward(const std::vector<std::string>& agent_messages,
                                    const Scenario& s, const nlohmann::json& final_db);

// Multi-turn tool-use dialogue over a synthetic record database. Tool-call
// actions run against the mutable database and return the tool output as the
// next observation; any other action is a message to the simulated user,
// whose reply either continues the dialogue or stops the episode.
class SdrEnv : public env::EnvState {
 public:
  explicit SdrEnv(UserSimFactory user_factory, SdrOptions opts = {});

  void reset(std::uint64_t seed) override;
  std::string observe(int player) const override;
  void step(const std::optional<std::string>& action) override;
  std::map<std::string, std::string> episode_tags() const override;

  const Scenario& scenario() const { return scenario_; }
  const nlohmann::json& database() const { return db_; }
  const std::vector<std::string>& agent_messages() const { return agent_messages_; }

 private:
  UserSimFactory user_factory_;
  SdrOptions opts_;
  Scenario scenario_;
  nlohmann::json db_;
  std::unique_ptr<UserSimulator> user_;
  std::string pending_obs_;
  std::vector<std::string> agent_messages_;
};

env::EnvSpec sdr_spec();

}  // namespace caprl::synth
