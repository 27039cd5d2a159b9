#include "caprl/synth/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "caprl/common.hpp"

namespace caprl::synth {

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::kAirline: return "airline";
    case Domain::kRetail: return "retail";
    case Domain::kDevice: return "device";
  }
  return "unknown";
}

std::string skill_name(Skill s) {
  switch (s) {
    case Skill::kCommunicate: return "communicate";
    case Skill::kRecovery: return "recovery";
    case Skill::kCombined: return "combined";
    case Skill::kNone: return "none";
  }
  return "unknown";
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["domain"] = domain_name(s.domain);
  j["task_type"] = s.task_type;
  j["database"] = s.database;
  j["initial_message"] = s.initial_message;
  j["user_system_prompt"] = s.user_system_prompt;
  if (s.expected_tool) {
    j["expected_tool"] = {{"name", s.expected_tool->name}, {"args", s.expected_tool->args}};
  } else {
    j["expected_tool"] = nullptr;
  }
  if (s.expected_answer) {
    j["expected_answer"] = *s.expected_answer;
  } else {
    j["expected_answer"] = nullptr;
  }
  j["communicate_info"] = s.communicate_info;
  j["expects_mutation"] = s.expects_mutation;
  j["skill"] = skill_name(s.skill);
  j["reveal_script"] = s.reveal_script;
  return j;
}

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a64(scenario_to_json(s).dump()); }

std::uint64_t db_hash(const nlohmann::json& db) { return fnv1a64(db.dump()); }

void RewardBreakdown::validate() const {
  for (const auto& [name, v] : components) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::logic_error("reward component '" + name + "' outside [0,1]");
    }
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::logic_error("reward alpha outside [0,1]");
  const double expect = alpha * multiplicative + (1.0 - alpha) * additive;
  if (std::abs(total - expect) > 1e-12) {
    throw std::logic_error("reward breakdown total does not match alpha-blend of parts");
  }
}

RewardBreakdown compose_reward(const std::map<std::string, double>& components,
                               const std::map<std::string, double>& weights, double alpha) {
  if (components.empty()) throw std::invalid_argument("compose_reward: no components");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("compose_reward: alpha outside [0,1]");
  }
  double wsum = 0.0;
  for (const auto& [name, w] : weights) {
    if (w < 0.0) throw std::invalid_argument("compose_reward: negative weight for '" + name + "'");
    if (!components.count(name)) {
      throw std::invalid_argument("compose_reward: weight for unknown component '" + name + "'");
    }
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("compose_reward: weights must sum to 1");
  }

  RewardBreakdown out;
  out.components = components;
  out.alpha = alpha;
  out.multiplicative = 1.0;
  for (const auto& [name, v] : components) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("compose_reward: component '" + name + "' outside [0,1]");
    }
    out.multiplicative *= v;
    auto it = weights.find(name);
    if (it == weights.end()) {
      throw std::invalid_argument("compose_reward: missing weight for component '" + name + "'");
    }
    out.additive += it->second * v;
  }
  out.total = alpha * out.multiplicative + (1.0 - alpha) * out.additive;
  out.validate();
  return out;
}

}  // namespace caprl::synth
