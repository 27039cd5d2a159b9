#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "caprl/adapters/lora.hpp"
#include "caprl/env/env.hpp"
#include "caprl/env/trajectory.hpp"
#include "caprl/gateway/gateway.hpp"
#include "caprl/grpo/policy.hpp"
#include "caprl/rollout/rollout.hpp"

namespace caprl::routing {

inline constexpr const char* kBaseLabel = "BASE";

// Single-character labels A..Y; at most 25 capabilities per prompt.
std::vector<std::string> routing_labels(std::size_t n);

// One routable capability: description for the router plus one successful
// exemplar episode from its training environment.
struct RoutingCard {
  std::string capability_id;
  std::string name;
  std::string description;
  env::Trajectory exemplar;
  std::optional<double> relevance;  // static config value, shown when set
};

// First successful trajectory in collection order (groups are already seed-
// ordered), or nullopt when none succeeded.
std::optional<env::Trajectory> pick_exemplar(const std::vector<rollout::RolloutGroup>& groups);

struct RoutingPrompt {
  std::string text;  // contains the task, every skill section, and the
                     // closing "Only output the label." instruction
  std::string task;
  std::vector<std::string> labels;  // A.. plus BASE, in choice order
  std::map<std::string, std::string> label_to_capability;  // excludes BASE
  std::uint64_t digest = 0;
};

// Lays out one "<label>) name - description" section per card (exemplar
// transcript inside the section) and appends the BASE fallback instruction.
// Errors: duplicate capability ids, a card without a successful exemplar,
// more than 25 cards.
RoutingPrompt assemble_routing_prompt(const std::string& task_o1,
                                      const std::vector<RoutingCard>& cards);

struct RoutingDecision {
  std::string chosen;        // capability_id, or kBaseLabel
  std::string chosen_label;  // the label token that won
  std::map<std::string, double> label_logits;  // empty when the backend
                                               // exposes no scores
  std::uint64_t prompt_digest = 0;
  bool fell_back = false;  // backend answered outside the label set
  std::string warning;

  nlohmann::json to_json() const;
};

// Argmax with the shared tie rule: lowest label alphabetically wins ties and
// BASE loses every tie (strict > while scanning BASE last).
std::string argmax_label(const std::map<std::string, double>& logits,
                         const std::vector<std::string>& labels);

class Router {
 public:
  virtual ~Router() = default;
  virtual RoutingDecision route(const RoutingPrompt& prompt) = 0;
};

// Built-in path: restricted next-token logits from an in-process policy.
// The policy must expose scores for every label (ProtocolError otherwise).
class PolicyRouter : public Router {
 public:
  explicit PolicyRouter(const env::AgentPolicy& policy) : policy_(policy) {}
  RoutingDecision route(const RoutingPrompt& prompt) override;

 private:
  const env::AgentPolicy& policy_;
};

// Remote path: constrained single-token decode at temperature 0. A reply
// outside the label set falls back to BASE with a warning.
class GatewayRouter : public Router {
 public:
  GatewayRouter(gateway::Gateway& gw, std::string model)
      : gw_(gw), model_(std::move(model)) {}
  RoutingDecision route(const RoutingPrompt& prompt) override;

 private:
  gateway::Gateway& gw_;
  std::string model_;
};

struct RoutedEpisode {
  RoutingDecision decision;
  env::Trajectory trajectory;
};

// Routes one task, merges at most one adapter into an episode-local copy of
// the base policy (none for BASE), and runs the episode. The base policy is
// never modified. Unknown chosen capability ids raise ProtocolError.
RoutedEpisode run_with_routing(const env::EnvRegistry& reg, const std::string& env_name,
                               const std::vector<RoutingCard>& cards, Router& router,
                               const grpo::SoftmaxAdapterPolicy& base_policy,
                               const std::map<std::string, adapters::LoraAdapter>& adapters,
                               std::uint64_t scenario_seed, std::uint64_t rng_seed,
                               int max_steps, double temperature);

}  // namespace caprl::routing
