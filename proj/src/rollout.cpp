#include "caprl/rollout/rollout.hpp"

#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

namespace caprl::rollout {

namespace {

// Non-owning view of a shared policy, so both factory-made and shared
// policies flow through the same unique_ptr-based interface.
class PolicyRef : public env::AgentPolicy {
 public:
  explicit PolicyRef(const env::AgentPolicy* p) : p_(p) {}
  std::string act(const std::string& prompt, const env::DecodeParams& decode,
                  Rng& rng) const override {
    return p_->act(prompt, decode, rng);
  }
  std::optional<std::map<std::string, double>> label_scores(
      const std::string& prompt, const std::vector<std::string>& labels) const override {
    return p_->label_scores(prompt, labels);
  }

 private:
  const env::AgentPolicy* p_;
};

}  // namespace

PolicyFactory shared_policy(const env::AgentPolicy& policy) {
  return [p = &policy](const env::EnvState&, std::uint64_t) {
    return std::make_unique<PolicyRef>(p);
  };
}

env::Trajectory run_episode(env::EnvState& env, const env::EnvSpec& spec,
                            const env::AgentPolicy& policy, std::uint64_t scenario_seed,
                            std::uint64_t rng_seed, int max_steps, double temperature) {
  if (max_steps < 1) throw ConfigError("run_episode: max_steps must be >= 1");
  env.reset(scenario_seed);
  Rng rng(rng_seed);
  const auto& extract = env::extractor(spec.action_extractor_id);
  env::DecodeParams decode;
  decode.temperature = temperature;
  decode.max_tokens = spec.max_gen_tokens;

  env::Trajectory traj;
  traj.task_id = spec.name + ":" + std::to_string(scenario_seed);
  traj.episode_seed = rng_seed;
  traj.env_name = spec.name;

  int turns = 0;
  while (!env.done() && turns < max_steps) {
    traj.steps.push_back({env::StepRole::kObservation, env.observe(0)});
    const std::string prompt = env::build_prompt(spec.system_prompt, traj.steps);
    const std::string raw = policy.act(prompt, decode, rng);
    const std::optional<std::string> canonical = extract(raw);
    traj.steps.push_back({env::StepRole::kAction, canonical.value_or(raw)});
    env.step(canonical);
    ++turns;
  }

  for (const auto& [k, v] : env.episode_tags()) traj.metadata[k] = v;
  if (!env.done()) {
    traj.metadata["truncated"] = "true";
    traj.reward = 0.0;
    traj.success = false;
  } else {
    if (env.invalid_player()) traj.metadata["invalid_action"] = "true";
    auto it = env.rewards().find(0);
    traj.reward = it == env.rewards().end() ? 0.0 : it->second;
    traj.success = traj.reward >= spec.success_threshold;
  }
  return traj;
}

CollectResult collect_groups(const env::EnvRegistry& reg, const std::string& env_name,
                             const PolicyFactory& make_policy, const RolloutOptions& opts) {
  std::vector<std::uint64_t> seeds = opts.group_seeds;
  if (seeds.empty()) {
    if (opts.n_groups < 1) throw ConfigError("collect_groups: n_groups must be >= 1");
    for (int g = 0; g < opts.n_groups; ++g) {
      seeds.push_back(opts.global_seed + static_cast<std::uint64_t>(g));
    }
  }
  if (opts.group_size < 1) throw ConfigError("collect_groups: group_size must be >= 1");
  if (opts.threads < 1) throw ConfigError("collect_groups: threads must be >= 1");
  const env::EnvSpec spec = reg.spec(env_name);
  const int n_groups = static_cast<int>(seeds.size());

  struct Slot {
    std::optional<RolloutGroup> group;
    std::string error;
  };
  std::vector<Slot> slots(seeds.size());
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (int g = next.fetch_add(1); g < n_groups; g = next.fetch_add(1)) {
      const std::uint64_t group_seed = seeds[static_cast<std::size_t>(g)];
      RolloutGroup grp;
      grp.group_seed = group_seed;
      try {
        for (int k = 0; k < opts.group_size; ++k) {
          auto envp = reg.make(env_name);
          envp->reset(group_seed);
          auto policy = make_policy(*envp, group_seed);
          const std::uint64_t rng_seed = derive_seed(
              "episode", {opts.global_seed, group_seed, static_cast<std::uint64_t>(k)});
          env::Trajectory t = run_episode(*envp, spec, *policy, group_seed, rng_seed,
                                          opts.max_steps, opts.temperature);
          t.metadata["group_seed"] = std::to_string(group_seed);
          t.metadata["replicate"] = std::to_string(k);
          grp.rewards.push_back(t.reward);
          grp.trajectories.push_back(std::move(t));
        }
        slots[static_cast<std::size_t>(g)].group = std::move(grp);
      } catch (const std::exception& e) {
        slots[static_cast<std::size_t>(g)].error = e.what();
      }
    }
  };

  const int n_threads = std::min(opts.threads, n_groups);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CollectResult out;
  for (int g = 0; g < n_groups; ++g) {
    auto& slot = slots[static_cast<std::size_t>(g)];
    if (slot.group) {
      out.groups.push_back(std::move(*slot.group));
    } else {
      out.failures.emplace_back(seeds[static_cast<std::size_t>(g)], slot.error);
    }
  }
  return out;
}

CollectResult collect_groups(const env::EnvRegistry& reg, const std::string& env_name,
                             const env::AgentPolicy& policy, const RolloutOptions& opts) {
  return collect_groups(reg, env_name, shared_policy(policy), opts);
}

}  // namespace caprl::rollout
