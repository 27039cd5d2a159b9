#pragma once

// Single-turn contextual bandit for trainer checks: the observation names the
// rewarded token outright ("hint gold"), so a zero-weight policy sits at
// exactly 1/|vocab| and the trainer has to learn the read-the-hint behavior.
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caprl/common.hpp"
#include "caprl/env/env.hpp"

namespace caprl::testsupport {

class HintBanditEnv : public env::EnvState {
 public:
  static const std::vector<std::string>& bandit_vocab() {
    static const std::vector<std::string> v = {"red", "green", "blue", "gold"};
    return v;
  }

  void reset(std::uint64_t seed) override {
    clear_state();
    Rng rng(derive_seed("bandit", {seed}));
    target_ = bandit_vocab()[rng.uniform_index(bandit_vocab().size())];
    obs_ = "hint " + target_;
  }

  std::string observe(int player) const override {
    if (player != 0) throw ProtocolError("hint bandit has a single agent player");
    return obs_;
  }

  std::vector<std::string> legal_actions() const override { return bandit_vocab(); }

  void step(const std::optional<std::string>& action) override {
    require_active();
    if (!action) {
      finish_invalid(0);
      return;
    }
    finish(trim(*action) == target_ ? 1.0 : 0.0);
  }

  std::map<std::string, std::string> episode_tags() const override {
    return {{"target", target_}};
  }

 private:
  std::string obs_;
  std::string target_;
};

inline env::EnvSpec hint_bandit_spec() {
  env::EnvSpec spec;
  spec.name = "hint_bandit";
  spec.max_gen_tokens = 8;
  spec.action_extractor_id = "verbatim_token";
  spec.success_threshold = 1.0;
  return spec;
}

inline void register_hint_bandit(env::EnvRegistry& reg) {
  if (!reg.contains("hint_bandit"))
    reg.register_env(hint_bandit_spec(), []() { return std::make_unique<HintBanditEnv>(); });
}

}  // namespace caprl::testsupport
