#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "caprl/adapters/lora.hpp"
#include "caprl/grpo/policy.hpp"
#include "caprl/rollout/rollout.hpp"

namespace caprl::grpo {

// Frozen base weights plus the trainable low-rank factors; the rollout
// distribution is softmax((W + B*A) phi(h) / temperature) over vocab.
// Training mutates adapter.A / adapter.B only.
struct TrainableAdapterPolicy {
  std::vector<std::string> vocab;
  Eigen::MatrixXd base_weights;  // frozen
  adapters::LoraAdapter adapter;
  std::string system_prompt;  // prefix of every prompt phi sees
  double temperature = 1.0;

  void validate() const;
  Eigen::MatrixXd effective_weights() const { return base_weights + adapter.delta(); }
  SoftmaxAdapterPolicy rollout_policy() const {
    return SoftmaxAdapterPolicy(vocab, effective_weights());
  }
};

struct TrainerConfig {
  double learning_rate = 1e-5;
  int max_iterations = 40;
  double clip_epsilon = 0.2;  // ratio clip half-width
  double std_epsilon = 1e-6;  // advantage denominator guard
  int groups_per_iter = 16;   // G scenarios per wave
  int group_size = 8;         // K replicates per scenario
  double rollout_temperature = 1.0;
  // Built-in-policy knobs (not part of the update rule).
  int rank = 8;
  int feature_dim = 256;
  double base_strength = 9.5;  // echo prior of the default base policy
  int max_steps = 8;
  int threads = 1;

  void validate() const;  // ConfigError on bad ranges
};

// A-hat_{g,k} = (r_{g,k} - mean_g) / (sigma_g + std_epsilon), population
// sigma. Requires group_size >= 2 and rewards matching trajectories.
rollout::RolloutGroup normalize_advantages(const rollout::RolloutGroup& group,
                                           double std_epsilon);

// Drops zero-variance groups (identical rewards carry no gradient signal).
std::vector<rollout::RolloutGroup> filter_informative(
    const std::vector<rollout::RolloutGroup>& groups);

// Per-trajectory action-token logprobs under the policy that produced the
// rollouts, aligned with Trajectory::action_texts().
using TokenLogprobs = std::vector<std::vector<double>>;

TokenLogprobs action_logprobs(const TrainableAdapterPolicy& policy,
                              const std::vector<rollout::RolloutGroup>& groups);

struct SurrogateResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_A;  // dloss/dA
  Eigen::MatrixXd grad_B;  // dloss/dB
  double clip_fraction = 0.0;
  int token_count = 0;
};

// loss = -(1/|B|) sum_traj (1/T) sum_t min(rho_t * A, clip(rho_t, 1-eps,
// 1+eps) * A), rho_t the per-token probability ratio against
// old_policy_logprobs. Gradients are analytic through the softmax and the
// low-rank factors; a clipped-and-selected token contributes zero gradient.
// Groups must carry advantages; logprob shapes must match the trajectories.
SurrogateResult surrogate_loss(const TrainableAdapterPolicy& policy,
                               const TokenLogprobs& old_policy_logprobs,
                               const std::vector<rollout::RolloutGroup>& groups,
                               double clip_epsilon);

struct TrainOutcome {
  adapters::LoraAdapter adapter;
  std::vector<double> history;  // per-iteration mean reward over the wave
  int wasted_iterations = 0;    // waves where every group was uninformative
  bool aborted = false;
  std::string abort_reason;
};

// Up to max_iterations of {refresh rollout policy, collect G x K, normalize,
// filter, one full-batch gradient step}. Wave g always replays scenario seed
// seed + g with policy streams derived from (seed, group_seed, k), so a
// zero-learning-rate run repeats identical waves (flat history) and any two
// runs differ only through the policy update. Rollout or numeric failures
// abort with the last good adapter.
TrainOutcome train_capability(const env::EnvRegistry& reg, const std::string& env_name,
                              const std::string& capability_id,
                              const Eigen::MatrixXd& base_weights, const TrainerConfig& config,
                              std::uint64_t seed);

// Same, with the default base policy for the environment (echo prior over
// its enumerable action vocabulary).
TrainOutcome train_capability(const env::EnvRegistry& reg, const std::string& env_name,
                              const std::string& capability_id, const TrainerConfig& config,
                              std::uint64_t seed);

}  // namespace caprl::grpo
