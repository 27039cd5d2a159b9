#pragma once

#include <string>
#include <vector>

#include "caprl/env/env.hpp"
#include "caprl/synth/scenario.hpp"

namespace caprl::synth {

// Skill mixture: u < 0.40 -> communicate, u < 0.80 -> recovery, else combined.
inline constexpr double kTecCommunicateCut = 0.40;
inline constexpr double kTecRecoveryCut = 0.80;

// Device-assistant scenario. Recovery and combined scenarios plant a
// low-battery blocker the agent must clear before the target radio can be
// switched on; communicate scenarios only require reading state back.
Scenario generate_tec_scenario(std::uint64_t seed);

// Final score: 0.6 * action + 0.4 * communication. Action checks the device
// state for recovery/combined skills, and that the expected read tool ran
// (called_tools) for communicate skills, since read-only tools leave no
// database trace. Communication is the fraction of scenario keywords present
// in the final response (case-insensitive, whitespace-normalized substring).
RewardBreakdown evaluate_tec_reward(const std::string& final_response,
                                    const nlohmann::json& final_db, const Scenario& s,
                                    const std::vector<std::string>& called_tools = {});

// Tool turns mutate/read the device database; the first message turn is the
// final response and ends the episode.
class TecEnv : public env::EnvState {
 public:
  TecEnv() = default;

  void reset(std::uint64_t seed) override;
  std::string observe(int player) const override;
  void step(const std::optional<std::string>& action) override;
  std::map<std::string, std::string> episode_tags() const override;

  const Scenario& scenario() const { return scenario_; }
  const nlohmann::json& database() const { return db_; }
  const std::vector<std::string>& called_tools() const { return called_tools_; }

 private:
  Scenario scenario_;
  nlohmann::json db_;
  std::vector<std::string> called_tools_;
  std::string pending_obs_;
};

env::EnvSpec tec_spec();

}  // namespace caprl::synth
