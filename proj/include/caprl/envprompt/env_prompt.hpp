#pragma once

#include <string>

namespace caprl::envprompt {

// Inputs for the environment-designer prompt. Every field fills exactly one
// template placeholder and must be non-empty.
struct EnvPromptInputs {
  std::string skill_description;      // {SKILL_DESCRIPTION}
  std::string failure_pattern;        // {FAILURE_PATTERN}
  std::string correct_behavior;       // {CORRECT_BEHAVIOR}
  std::string trajectory_examples;    // {TRAJECTORY_EXAMPLES_OR_PATH}
  std::string game_name;              // {GAME_NAME}
  std::string vllm_url;               // {VLLM_URL}
};

// The raw template, with placeholders unfilled.
const std::string& env_prompt_template();

// Renders the template. An empty input raises ConfigError naming the
// placeholder it would have filled; the result contains no '{' placeholders
// from the template.
std::string render_env_prompt(const EnvPromptInputs& inputs);

}  // namespace caprl::envprompt
