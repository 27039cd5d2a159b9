#include "caprl/routing/routing.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace caprl::routing {

using nlohmann::json;

std::vector<std::string> routing_labels(std::size_t n) {
  if (n > 25) throw ConfigError("routing supports at most 25 capabilities (labels A..Y)");
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(1, static_cast<char>('A' + i));
  return out;
}

std::optional<env::Trajectory> pick_exemplar(
    const std::vector<rollout::RolloutGroup>& groups) {
  for (const auto& g : groups)
    for (const auto& t : g.trajectories)
      if (t.success) return t;
  return std::nullopt;
}

RoutingPrompt assemble_routing_prompt(const std::string& task_o1,
                                      const std::vector<RoutingCard>& cards) {
  std::set<std::string> seen;
  for (const auto& c : cards) {
    if (c.capability_id.empty()) throw ProtocolError("routing card without a capability id");
    if (!seen.insert(c.capability_id).second)
      throw ProtocolError("duplicate capability id in routing cards: " + c.capability_id);
    if (c.exemplar.steps.empty() || !c.exemplar.success)
      throw ProtocolError("card '" + c.capability_id +
                          "' lacks a successful exemplar episode");
  }

  RoutingPrompt out;
  out.task = task_o1;
  out.labels = routing_labels(cards.size());

  std::ostringstream text;
  text << "You route tasks to trained skills. Read the task, compare it with each skill's\n"
          "description and example episode, and pick the one skill the task needs.\n\n"
          "Task:\n"
       << task_o1 << "\n\n";
  if (!cards.empty()) text << "Skills:\n";
  for (std::size_t i = 0; i < cards.size(); ++i) {
    const RoutingCard& c = cards[i];
    out.label_to_capability[out.labels[i]] = c.capability_id;
    text << out.labels[i] << ") " << c.name << " - " << c.description << "\n";
    if (c.relevance) text << "  relevance " << *c.relevance << "\n";
    text << "  example:\n";
    for (const auto& step : c.exemplar.steps)
      text << "  " << (step.role == env::StepRole::kObservation ? "[obs] " : "[act] ")
           << step.text << "\n";
  }
  text << "\nIf no listed skill applies, answer " << kBaseLabel
       << ". Only output the label.\n";

  out.labels.emplace_back(kBaseLabel);
  out.text = text.str();
  out.digest = fnv1a64(out.text);
  return out;
}

std::string argmax_label(const std::map<std::string, double>& logits,
                         const std::vector<std::string>& labels) {
  std::vector<std::string> order(labels.begin(), labels.end());
  std::sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
    const bool ab = a == kBaseLabel, bb = b == kBaseLabel;
    if (ab != bb) return bb;  // BASE scans last, so it loses exact ties
    return a < b;
  });
  std::string best;
  double best_score = 0.0;
  for (const auto& label : order) {
    auto it = logits.find(label);
    if (it == logits.end()) continue;
    if (best.empty() || it->second > best_score) {
      best = label;
      best_score = it->second;
    }
  }
  return best.empty() ? std::string(kBaseLabel) : best;
}

namespace {

std::string capability_for(const RoutingPrompt& prompt, const std::string& label) {
  if (label == kBaseLabel) return kBaseLabel;
  auto it = prompt.label_to_capability.find(label);
  if (it == prompt.label_to_capability.end())
    throw ProtocolError("label '" + label + "' is not part of the routing prompt");
  return it->second;
}

}  // namespace

RoutingDecision PolicyRouter::route(const RoutingPrompt& prompt) {
  auto scores = policy_.label_scores(prompt.text, prompt.labels);
  if (!scores)
    throw ProtocolError("policy does not expose next-token scores for the routing labels");
  RoutingDecision d;
  d.label_logits = *scores;
  d.chosen_label = argmax_label(d.label_logits, prompt.labels);
  d.chosen = capability_for(prompt, d.chosen_label);
  d.prompt_digest = prompt.digest;
  return d;
}

RoutingDecision GatewayRouter::route(const RoutingPrompt& prompt) {
  gateway::ChatRequest req;
  req.model = model_;
  req.messages = {{"system", prompt.text}, {"user", prompt.task}};
  const gateway::ChoiceResult res = gw_.choose(std::move(req), prompt.labels);

  RoutingDecision d;
  d.prompt_digest = prompt.digest;
  const bool in_set =
      std::find(prompt.labels.begin(), prompt.labels.end(), res.label) != prompt.labels.end();
  if (!in_set) {
    d.chosen_label = kBaseLabel;
    d.chosen = kBaseLabel;
    d.fell_back = true;
    d.warning = "router replied '" + res.label + "', outside the label set; using " +
                kBaseLabel;
    return d;
  }
  if (res.scores) {
    d.label_logits = *res.scores;
    d.chosen_label = argmax_label(d.label_logits, prompt.labels);
  } else {
    // Score-less backend: the constrained decode itself is the argmax.
    for (const auto& label : prompt.labels) d.label_logits[label] = 0.0;
    d.label_logits[res.label] = 1.0;
    d.chosen_label = res.label;
  }
  d.chosen = capability_for(prompt, d.chosen_label);
  return d;
}

json RoutingDecision::to_json() const {
  json logits = json::object();
  for (const auto& [label, score] : label_logits) logits[label] = score;
  return json{{"chosen", chosen},
              {"chosen_label", chosen_label},
              {"label_logits", logits},
              {"prompt_digest", hex64(prompt_digest)},
              {"fell_back", fell_back},
              {"warning", warning}};
}

RoutedEpisode run_with_routing(const env::EnvRegistry& reg, const std::string& env_name,
                               const std::vector<RoutingCard>& cards, Router& router,
                               const grpo::SoftmaxAdapterPolicy& base_policy,
                               const std::map<std::string, adapters::LoraAdapter>& adapters,
                               std::uint64_t scenario_seed, std::uint64_t rng_seed,
                               int max_steps, double temperature) {
  const env::EnvSpec& spec = reg.spec(env_name);
  auto envp = reg.make(env_name);
  envp->reset(scenario_seed);
  const std::string task = envp->observe(0);

  RoutedEpisode out;
  out.decision = router.route(assemble_routing_prompt(task, cards));

  // Episode-local weights: merge builds a fresh policy, BASE reuses the
  // shared base unchanged.
  std::optional<grpo::SoftmaxAdapterPolicy> merged;
  if (out.decision.chosen != kBaseLabel) {
    auto it = adapters.find(out.decision.chosen);
    if (it == adapters.end())
      throw ProtocolError("routing chose capability '" + out.decision.chosen +
                          "' but no adapter is loaded for it");
    merged.emplace(base_policy.with_merged(it->second));
  }
  const env::AgentPolicy& acting = merged ? static_cast<const env::AgentPolicy&>(*merged)
                                          : static_cast<const env::AgentPolicy&>(base_policy);
  out.trajectory = rollout::run_episode(*envp, spec, acting, scenario_seed, rng_seed,
                                        max_steps, temperature);
  out.trajectory.metadata["routed_label"] = out.decision.chosen_label;
  out.trajectory.metadata["routed_capability"] = out.decision.chosen;
  if (out.decision.fell_back) out.trajectory.metadata["route_fallback"] = "1";
  return out;
}

}  // namespace caprl::routing
