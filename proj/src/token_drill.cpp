#include "caprl/synth/token_drill.hpp"

#include <algorithm>

#include "caprl/common.hpp"

namespace caprl::synth {

namespace {

const std::vector<std::pair<std::string, int>>& cue_table(DrillRule rule,
                                                          const DrillOptions& opts) {
  switch (rule) {
    case DrillRule::kPartner: return opts.partner_cues;
    case DrillRule::kSuccessor: return opts.successor_cues;
    default: throw ProtocolError("copy drills cue on the vocabulary itself");
  }
}

void validate_options(const DrillOptions& opts) {
  if (opts.vocab.size() < 2) throw ConfigError("drill vocab needs at least 2 tokens");
  for (const auto* cues : {&opts.partner_cues, &opts.successor_cues}) {
    if (cues->empty()) throw ConfigError("drill cue table may not be empty");
    for (const auto& [cue, idx] : *cues) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= opts.vocab.size())
        throw ConfigError("drill cue '" + cue + "' maps outside the vocab");
      if (std::find(opts.vocab.begin(), opts.vocab.end(), cue) != opts.vocab.end())
        throw ConfigError("drill cue '" + cue + "' collides with the emission vocab");
    }
  }
}

}  // namespace

std::string drill_rule_name(DrillRule rule) {
  switch (rule) {
    case DrillRule::kCopy: return "copy";
    case DrillRule::kPartner: return "partner";
    case DrillRule::kSuccessor: return "successor";
  }
  return "unknown";
}

std::size_t drill_cue_count(DrillRule rule, const DrillOptions& opts) {
  if (rule == DrillRule::kCopy) return opts.vocab.size();
  return cue_table(rule, opts).size();
}

std::string drill_cue(DrillRule rule, std::size_t i, const DrillOptions& opts) {
  if (i >= drill_cue_count(rule, opts)) throw ProtocolError("drill cue index out of range");
  if (rule == DrillRule::kCopy) return opts.vocab[i];
  return cue_table(rule, opts)[i].first;
}

std::string drill_target(DrillRule rule, std::size_t i, const DrillOptions& opts) {
  if (i >= drill_cue_count(rule, opts)) throw ProtocolError("drill cue index out of range");
  if (rule == DrillRule::kCopy) return opts.vocab[i];
  return opts.vocab[cue_table(rule, opts)[i].second];
}

std::string drill_instruction(DrillRule rule, const std::string& cue) {
  switch (rule) {
    case DrillRule::kCopy: return "say exactly " + cue;
    case DrillRule::kPartner: return "partner " + cue;
    case DrillRule::kSuccessor: return "successor " + cue;
  }
  throw ProtocolError("unknown drill rule");
}

TokenDrillEnv::TokenDrillEnv(std::vector<DrillRule> rules, std::vector<double> weights,
                             DrillOptions opts)
    : rules_(std::move(rules)), weights_(std::move(weights)), opts_(std::move(opts)) {
  if (rules_.empty() || rules_.size() != weights_.size()) {
    throw ConfigError("drill env needs matching rule and weight lists");
  }
  validate_options(opts_);
}

void TokenDrillEnv::reset(std::uint64_t seed) {
  clear_state();
  Rng rng(derive_seed("drill", {seed}));
  rule_ = rules_[rng.weighted_index(weights_)];
  const std::size_t i = rng.uniform_index(drill_cue_count(rule_, opts_));
  cue_ = drill_cue(rule_, i, opts_);
  target_ = drill_target(rule_, i, opts_);
  obs_ = drill_instruction(rule_, cue_);
}

std::string TokenDrillEnv::observe(int player) const {
  if (player != 0) throw ProtocolError("token drills have a single agent player");
  return obs_;
}

void TokenDrillEnv::step(const std::optional<std::string>& action) {
  require_active();
  if (!action) {
    finish_invalid(0);
    return;
  }
  finish(trim(*action) == target_ ? 1.0 : 0.0);
}

std::map<std::string, std::string> TokenDrillEnv::episode_tags() const {
  return {{"family", drill_rule_name(rule_)}, {"payload", cue_}, {"target", target_}};
}

env::EnvSpec drill_spec(const std::string& name) {
  env::EnvSpec spec;
  spec.name = name;
  spec.max_gen_tokens = 8;
  spec.action_extractor_id = "verbatim_token";
  spec.success_threshold = 1.0;
  return spec;
}

}  // namespace caprl::synth
