#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "caprl/env/env.hpp"
#include "caprl/env/trajectory.hpp"

namespace caprl::rollout {

// A group of same-seed rollouts (the group seed is the scenario seed;
// replicates differ only in their policy random stream). rewards mirrors
// trajectories; advantages appears after group-relative normalization.
struct RolloutGroup {
  std::uint64_t group_seed = 0;
  std::vector<env::Trajectory> trajectories;
  std::vector<double> rewards;
  std::optional<std::vector<double>> advantages;
};

struct RolloutOptions {
  std::vector<std::uint64_t> group_seeds;  // explicit scenario seeds, or ...
  int n_groups = 20;                       // ... global_seed + i when empty
  int group_size = 8;
  int max_steps = 50;  // agent turns before truncation (reward 0)
  int threads = 1;
  std::uint64_t global_seed = 0;
  double temperature = 1.0;
};

// Builds the acting policy for one episode, after the environment has been
// reset to the scenario, so seed-aware oracles can read the scenario state.
using PolicyFactory =
    std::function<std::unique_ptr<env::AgentPolicy>(const env::EnvState&, std::uint64_t seed)>;

// Wraps a shared thread-safe policy as a PolicyFactory.
PolicyFactory shared_policy(const env::AgentPolicy& policy);

// Runs one episode: resets env to scenario_seed, then alternates
// observe -> prompt -> act -> extract -> step until the episode finishes or
// max_steps agent turns pass (truncation: reward 0, success false). The
// returned trajectory's episode_seed is rng_seed, the policy-stream seed.
env::Trajectory run_episode(env::EnvState& env, const env::EnvSpec& spec,
                            const env::AgentPolicy& policy, std::uint64_t scenario_seed,
                            std::uint64_t rng_seed, int max_steps, double temperature);

struct CollectResult {
  std::vector<RolloutGroup> groups;  // ordered by group index; failures removed
  std::vector<std::pair<std::uint64_t, std::string>> failures;  // (group_seed, reason)
};

// Collects one group per scenario seed with bounded parallelism. Replicate k
// of a group acts with stream derive_seed("episode", {global_seed,
// group_seed, k}). Output is identical for any thread count. A group whose
// episode throws is dropped whole and reported in failures.
CollectResult collect_groups(const env::EnvRegistry& reg, const std::string& env_name,
                             const PolicyFactory& make_policy, const RolloutOptions& opts);

CollectResult collect_groups(const env::EnvRegistry& reg, const std::string& env_name,
                             const env::AgentPolicy& policy, const RolloutOptions& opts);

}  // namespace caprl::rollout
