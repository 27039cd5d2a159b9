#pragma once

#include <string>
#include <utility>
#include <vector>

#include "caprl/env/env.hpp"

namespace caprl::synth {

// Single-turn token tasks over a small closed emission vocabulary. Three rule
// families: copy echoes the requested vocabulary token; partner and successor
// map a cue word (never itself emittable) to a fixed response token. The
// mixed environment draws the family per episode, which makes family-specific
// deficits separable by contrastive analysis. Cue words stay out of the
// vocabulary so an echo-prior policy solves copy tasks but sits at chance on
// the keyed families — those are the planted deficits.
enum class DrillRule { kCopy, kPartner, kSuccessor };

std::string drill_rule_name(DrillRule rule);

struct DrillOptions {
  std::vector<std::string> vocab = {"alpha", "bravo", "copper", "delta", "ember", "flint"};
  // cue word -> index of the response token in vocab
  std::vector<std::pair<std::string, int>> partner_cues = {
      {"north", 1}, {"moon", 3}, {"iron", 5}};
  std::vector<std::pair<std::string, int>> successor_cues = {
      {"dawn", 0}, {"noon", 2}, {"dusk", 4}};
};

// Number of distinct cues a rule draws from (copy cues are the vocab itself).
std::size_t drill_cue_count(DrillRule rule, const DrillOptions& opts);

// Cue word and its expected response for cue index i of a rule.
std::string drill_cue(DrillRule rule, std::size_t i, const DrillOptions& opts);
std::string drill_target(DrillRule rule, std::size_t i, const DrillOptions& opts);

std::string drill_instruction(DrillRule rule, const std::string& cue);

class TokenDrillEnv : public env::EnvState {
 public:
  TokenDrillEnv(std::vector<DrillRule> rules, std::vector<double> weights,
                DrillOptions opts = {});

  void reset(std::uint64_t seed) override;
  std::string observe(int player) const override;
  std::vector<std::string> legal_actions() const override { return opts_.vocab; }
  void step(const std::optional<std::string>& action) override;
  std::map<std::string, std::string> episode_tags() const override;

  DrillRule rule() const { return rule_; }
  const std::string& target() const { return target_; }

 private:
  std::vector<DrillRule> rules_;
  std::vector<double> weights_;
  DrillOptions opts_;
  DrillRule rule_ = DrillRule::kCopy;
  std::string cue_;
  std::string target_;
  std::string obs_;
};

env::EnvSpec drill_spec(const std::string& name);

}  // namespace caprl::synth
