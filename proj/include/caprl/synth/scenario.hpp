#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace caprl::synth {

enum class Domain { kAirline, kRetail, kDevice };
enum class Skill { kCommunicate, kRecovery, kCombined, kNone };

std::string domain_name(Domain d);
std::string skill_name(Skill s);

struct ToolInvocation {
  std::string name;
  nlohmann::json args;
};

// Seed-deterministic task instance: (generator id, seed) fully determines
// every field, including the synthetic database.
struct Scenario {
  std::uint64_t seed = 0;
  Domain domain = Domain::kAirline;
  std::string task_type;
  nlohmann::json database;
  std::string initial_message;
  std::string user_system_prompt;
  std::optional<ToolInvocation> expected_tool;
  std::optional<std::string> expected_answer;
  std::vector<std::string> communicate_info;
  bool expects_mutation = false;
  Skill skill = Skill::kNone;
  // Turns a scripted user simulator reveals one at a time (progressive
  // disclosure and nudges). LLM-backed simulators rely on
  // user_system_prompt instead.
  std::vector<std::string> reveal_script;
};

nlohmann::json scenario_to_json(const Scenario& s);

// Stable content hash of a scenario (canonical JSON of all fields).
std::uint64_t scenario_hash(const Scenario& s);

// Canonical-order content hash of a database tree: sorted-key JSON
// serialization then 64-bit FNV-1a.
std::uint64_t db_hash(const nlohmann::json& db);

// Shaped-reward decomposition. Invariant:
//   total == alpha * multiplicative + (1 - alpha) * additive  (within 1e-12)
// Tiered evaluators encode the tier with alpha = 1 and multiplicative set to
// the tier value; composed evaluators come from compose_reward.
struct RewardBreakdown {
  std::map<std::string, double> components;
  double multiplicative = 0.0;
  double additive = 0.0;
  double alpha = 1.0;
  double total = 0.0;

  // Throws std::logic_error when the invariant or ranges are violated.
  void validate() const;
};

// multiplicative = product of components, additive = sum of w_i * c_i,
// total = alpha * mult + (1 - alpha) * add. Components must lie in [0,1];
// weights must be nonnegative, keyed like components, and sum to 1 within
// 1e-9.
RewardBreakdown compose_reward(const std::map<std::string, double>& components,
                               const std::map<std::string, double>& weights, double alpha);

}  // namespace caprl::synth
