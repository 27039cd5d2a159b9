#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "caprl/common.hpp"

namespace caprl::env {

// --- agent action grammar ---
//
// Agent emissions are plain text. An action is either a tool call written as
//   tool_name({"arg": value, ...})
// or a user-directed message (any other non-empty text). parse_action applies
// this grammar to the extractor's canonical output.
struct AgentAction {
  enum class Kind { kToolCall, kMessage };
  Kind kind = Kind::kMessage;
  std::string name;      // tool name when kind == kToolCall
  nlohmann::json args;   // tool arguments when kind == kToolCall
  std::string text;      // message text when kind == kMessage
};

AgentAction parse_action(const std::string& canonical);

// Extractors turn raw generated text into a canonical action string, or
// nullopt when no action can be extracted (the invalid-move path).
using ActionExtractor = std::function<std::optional<std::string>(const std::string&)>;

// Built-in extractor ids:
//   "tool_call_v1"   last tool_name({...}) call if present, else the trimmed
//                    text as a message; whitespace-only input yields nullopt.
//   "verbatim_token" first whitespace-delimited token; empty input -> nullopt.
const ActionExtractor& extractor(const std::string& id);
void register_extractor(const std::string& id, ActionExtractor fn);
bool has_extractor(const std::string& id);

// --- environment protocol ---

// Registration record for one environment.
struct EnvSpec {
  std::string name;
  int max_gen_tokens = 2048;
  std::string system_prompt;
  std::string action_extractor_id = "tool_call_v1";
  // success = (terminal reward >= success_threshold). 1.0 suits tiered
  // rewards; continuous-reward environments register 0.99.
  double success_threshold = 1.0;
};

// Seed-deterministic multi-turn environment. Player 0 is the agent; any
// simulated user lives inside the environment. Instances are exclusively
// owned by one episode at a time (transferable between threads, never
// shared).
class EnvState {
 public:
  virtual ~EnvState() = default;

  // Moves to the initial state of scenario G(seed). Always valid; equal
  // seeds must yield bit-identical scenario state.
  virtual void reset(std::uint64_t seed) = 0;

  // The pending observation for a player. Player 0 is the agent.
  virtual std::string observe(int player_id) const = 0;

  // Enumerable action set, or empty when the action space is free-form text.
  virtual std::vector<std::string> legal_actions() const { return {}; }

  // Advances the episode. nullopt means the extractor produced no action;
  // the environment records invalid_player = 0 and terminates with reward 0.
  // Calling step after done is a caller error (ProtocolError).
  virtual void step(const std::optional<std::string>& action) = 0;

  bool done() const { return done_; }
  int current_player() const { return current_player_; }
  const std::map<int, double>& rewards() const { return rewards_; }
  std::optional<int> invalid_player() const { return invalid_player_; }

  // Scenario tags merged into trajectory metadata (task_type, skill, ...).
  virtual std::map<std::string, std::string> episode_tags() const { return {}; }

 protected:
  void require_active() const {
    if (done_) throw ProtocolError("step called on a finished episode");
  }
  void finish(double agent_reward) {
    done_ = true;
    rewards_[0] = agent_reward;
  }
  void finish_invalid(int player) {
    invalid_player_ = player;
    finish(0.0);
  }
  void clear_state() {
    done_ = false;
    current_player_ = 0;
    rewards_.clear();
    invalid_player_.reset();
  }

  bool done_ = false;
  int current_player_ = 0;
  std::map<int, double> rewards_;
  std::optional<int> invalid_player_;
};

using EnvFactory = std::function<std::unique_ptr<EnvState>()>;

// Name -> (spec, factory). Populated at startup (register_builtin_envs or
// test setup) and treated as immutable afterwards; concurrent reads are safe.
class EnvRegistry {
 public:
  void register_env(const EnvSpec& spec, EnvFactory factory);
  bool contains(const std::string& name) const;
  const EnvSpec& spec(const std::string& name) const;
  std::unique_ptr<EnvState> make(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  struct Entry {
    EnvSpec spec;
    EnvFactory factory;
  };
  std::map<std::string, Entry> entries_;
};

EnvRegistry& global_registry();

// --- policy surface ---

struct DecodeParams {
  double temperature = 1.0;
  int max_tokens = 256;
};

// Anything that can act in an episode: the built-in trainable policy, remote
// chat models, scripted oracles and mocks. act() must be safe for concurrent
// calls on the same instance; all stochasticity goes through the provided
// per-episode rng stream.
class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual std::string act(const std::string& prompt, const DecodeParams& decode,
                          Rng& rng) const = 0;

  // Restricted next-token scores over label tokens, when this policy can
  // expose them (the built-in routing path). nullopt otherwise.
  virtual std::optional<std::map<std::string, double>> label_scores(
      const std::string& /*prompt*/, const std::vector<std::string>& /*labels*/) const {
    return std::nullopt;
  }
};

// Prompt shown to the policy: system prompt then the transcript, one line
// per step, "[obs]"/"[act]" prefixed. Scripted policies rely on this format
// to count their own past turns.
std::string build_prompt(const std::string& system_prompt, const std::vector<struct Step>& steps);

}  // namespace caprl::env
