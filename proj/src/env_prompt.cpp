#include "caprl/envprompt/env_prompt.hpp"

#include <array>
#include <utility>

#include "caprl/common.hpp"

namespace caprl::envprompt {

const std::string& env_prompt_template() {
  static const std::string tmpl = R"(You are an RL environment designer. Build a seeded, group-rollout-friendly training
environment that teaches a language model one specific skill through procedurally
generated scenarios with shaped rewards.

== Target skill ==
- {SKILL_DESCRIPTION}
- What the model currently does wrong: {FAILURE_PATTERN}
- What correct behavior looks like: {CORRECT_BEHAVIOR}
- Example trajectories showing the failure:
{TRAJECTORY_EXAMPLES_OR_PATH}

== Interface requirements ==
The environment must implement the harness protocol: reset(seed) producing a
deterministic scenario, observe(player_id) returning the pending text observation
(player 0 is the agent), legal_actions() listing enumerable actions or returning an
empty list for free-form text, step(action) accepting the extracted action or a null
action for unparseable output, plus done, current_player, rewards per player, and
invalid_player. Register it under the name "{GAME_NAME}" together with its action
extractor, system prompt, and generation budget.

== Reward design ==
Group-relative training learns only from within-group reward variance; a group of
identical rewards is a wasted iteration. Therefore:
- Prefer multi-level or continuous rewards over pure pass/fail so partial progress
  is visible.
- Aim scenario difficulty so the base model lands mid-range rather than at either
  extreme; too easy gives no negative signal, too hard no positive signal.
- Multiply components that must co-occur (for example action_correct *
  communicated_result) and blend in a weighted additive floor so a single zero
  component does not erase the gradient:
    mult  = product of components
    add   = weighted sum of components (weights sum to 1)
    total = alpha * mult + (1 - alpha) * add

== Procedural generation ==
Every scenario derives from the reset seed alone: databases, user requests,
constraint combinations, and distractor counts are all sampled per seed. Equal
seeds reproduce the scenario bit-for-bit; different seeds must differ meaningfully,
and the scenario space must be too large to memorize.

== Skill isolation ==
Stress one skill per environment. When a small mix is unavoidable, sample the
skill per scenario at reset time from fixed probability weights, keep per-skill
scenario generators and reward logic separate, and tag each scenario with its
skill for later analysis.

== Deliverables ==
1. The environment implementation registered as "{GAME_NAME}".
2. A reward verification report produced against the inference server at
   {VLLM_URL}:
   - 100 single rollouts: mean reward (target: 0.3-0.6 for base model), reward
     standard deviation (target: >0.2), and a histogram of rewards rounded to one
     decimal.
   - 20 groups of 8 same-seed rollouts at temperature 1.0: the fraction of groups
     with more than one distinct reward (target: >60%).
   - A per-skill reward breakdown when the environment mixes skills.
)";
  return tmpl;
}

namespace {

void replace_all(std::string& text, const std::string& needle, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string render_env_prompt(const EnvPromptInputs& inputs) {
  const std::array<std::pair<const char*, const std::string*>, 6> slots = {{
      {"{SKILL_DESCRIPTION}", &inputs.skill_description},
      {"{FAILURE_PATTERN}", &inputs.failure_pattern},
      {"{CORRECT_BEHAVIOR}", &inputs.correct_behavior},
      {"{TRAJECTORY_EXAMPLES_OR_PATH}", &inputs.trajectory_examples},
      {"{GAME_NAME}", &inputs.game_name},
      {"{VLLM_URL}", &inputs.vllm_url},
  }};
  for (const auto& [placeholder, value] : slots) {
    if (trim(*value).empty())
      throw ConfigError(std::string("missing value for placeholder ") + placeholder);
  }
  std::string text = env_prompt_template();
  for (const auto& [placeholder, value] : slots) replace_all(text, placeholder, *value);
  return text;
}

}  // namespace caprl::envprompt
