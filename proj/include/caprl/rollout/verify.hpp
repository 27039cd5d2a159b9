#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "caprl/rollout/rollout.hpp"

namespace caprl::rollout {

struct VerifyOptions {
  int episodes = 100;   // single-rollout phase
  int n_groups = 20;    // grouped phase
  int group_size = 8;
  int max_steps = 16;
  int threads = 1;
  double temperature = 1.0;
};

// Health check of a seeded environment under a reference policy, before any
// training depends on it. Flags environments whose reward signal a
// group-relative learner cannot use: mean outside [0.3, 0.6], standard
// deviation at or below 0.2, or at most 60% of groups informative (a group is
// informative when its rewards, rounded to 2 decimals, take more than one
// distinct value).
struct VerificationReport {
  std::string env_name;
  int episodes = 0;
  double mean = 0.0;
  double stddev = 0.0;
  // reward rounded to one decimal -> count, keys "0.0" ... "1.0"
  std::map<std::string, int> histogram;
  int groups = 0;
  int informative_groups = 0;
  double informative_fraction = 0.0;
  std::map<std::string, double> per_skill_mean;
  std::map<std::string, int> per_skill_count;
  std::vector<std::string> warnings;
  bool ok = false;  // true iff no warnings

  std::string to_text() const;
  nlohmann::json to_json() const;
};

VerificationReport verify_environment(const env::EnvRegistry& reg, const std::string& env_name,
                                      const PolicyFactory& make_policy, std::uint64_t seed,
                                      const VerifyOptions& opts = {});

VerificationReport verify_environment(const env::EnvRegistry& reg, const std::string& env_name,
                                      const env::AgentPolicy& policy, std::uint64_t seed,
                                      const VerifyOptions& opts = {});

}  // namespace caprl::rollout
