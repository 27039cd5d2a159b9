#include "caprl/grpo/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "caprl/env/trajectory.hpp"

namespace caprl::grpo {

void TrainableAdapterPolicy::validate() const {
  if (vocab.empty()) throw ProtocolError("trainable policy: empty vocab");
  if (base_weights.rows() != static_cast<Eigen::Index>(vocab.size()))
    throw ProtocolError("trainable policy: base weight rows != vocab size");
  adapter.validate();
  if (adapter.d_out() != static_cast<int>(base_weights.rows()) ||
      adapter.d_in() != static_cast<int>(base_weights.cols()))
    throw ProtocolError("trainable policy: adapter shape disagrees with base weights");
  if (!(temperature > 0.0)) throw ProtocolError("trainable policy: temperature must be > 0");
}

void TrainerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("trainer: learning_rate must be finite and >= 0");
  if (max_iterations < 0) throw ConfigError("trainer: max_iterations must be >= 0");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("trainer: clip_epsilon must lie in (0,1)");
  if (!(std_epsilon > 0.0)) throw ConfigError("trainer: std_epsilon must be > 0");
  if (groups_per_iter < 1) throw ConfigError("trainer: groups_per_iter must be >= 1");
  if (group_size < 2) throw ConfigError("trainer: group_size must be >= 2");
  if (!(rollout_temperature > 0.0))
    throw ConfigError("trainer: rollout_temperature must be > 0");
  if (rank < 1) throw ConfigError("trainer: rank must be >= 1");
  if (feature_dim < 1) throw ConfigError("trainer: feature_dim must be >= 1");
  if (base_strength < 0.0) throw ConfigError("trainer: base_strength must be >= 0");
  if (max_steps < 1) throw ConfigError("trainer: max_steps must be >= 1");
  if (threads < 1) throw ConfigError("trainer: threads must be >= 1");
}

rollout::RolloutGroup normalize_advantages(const rollout::RolloutGroup& group,
                                           double std_epsilon) {
  if (group.rewards.size() != group.trajectories.size())
    throw ProtocolError("normalize_advantages: rewards do not match trajectories");
  const auto k = group.rewards.size();
  if (k < 2) throw ProtocolError("normalize_advantages: group size must be >= 2");
  double mean = 0.0;
  for (double r : group.rewards) mean += r;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double r : group.rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(k);  // population variance
  const double denom = std::sqrt(var) + std_epsilon;
  rollout::RolloutGroup out = group;
  out.advantages.emplace();
  out.advantages->reserve(k);
  for (double r : group.rewards) out.advantages->push_back((r - mean) / denom);
  return out;
}

std::vector<rollout::RolloutGroup> filter_informative(
    const std::vector<rollout::RolloutGroup>& groups) {
  std::vector<rollout::RolloutGroup> out;
  for (const auto& g : groups) {
    if (g.rewards.empty()) continue;
    const auto [lo, hi] = std::minmax_element(g.rewards.begin(), g.rewards.end());
    if (*lo < *hi) out.push_back(g);
  }
  return out;
}

namespace {

// Prompts the policy saw before each of its action steps, rebuilt from the
// trajectory transcript.
std::vector<std::pair<std::string, std::string>> action_prompts(
    const std::string& system_prompt, const env::Trajectory& traj) {
  std::vector<std::pair<std::string, std::string>> out;  // (prompt, action token)
  std::vector<env::Step> prefix;
  for (const env::Step& s : traj.steps) {
    if (s.role == env::StepRole::kAction)
      out.emplace_back(env::build_prompt(system_prompt, prefix), s.text);
    prefix.push_back(s);
  }
  return out;
}

}  // namespace

TokenLogprobs action_logprobs(const TrainableAdapterPolicy& policy,
                              const std::vector<rollout::RolloutGroup>& groups) {
  policy.validate();
  const SoftmaxAdapterPolicy rp = policy.rollout_policy();
  TokenLogprobs out;
  for (const auto& g : groups) {
    for (const auto& t : g.trajectories) {
      std::vector<double> lps;
      for (const auto& [prompt, token] : action_prompts(policy.system_prompt, t)) {
        auto idx = rp.token_index(token);
        if (!idx)
          throw ProtocolError("action token '" + token + "' is not in the policy vocab");
        lps.push_back(rp.logprob(prompt, *idx, policy.temperature));
      }
      out.push_back(std::move(lps));
    }
  }
  return out;
}

SurrogateResult surrogate_loss(const TrainableAdapterPolicy& policy,
                               const TokenLogprobs& old_policy_logprobs,
                               const std::vector<rollout::RolloutGroup>& groups,
                               double clip_epsilon) {
  policy.validate();
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ProtocolError("surrogate_loss: clip_epsilon must lie in (0,1)");

  const Eigen::MatrixXd M = policy.effective_weights();
  const double tau = policy.temperature;
  const int dim = static_cast<int>(M.cols());
  const SoftmaxAdapterPolicy rp(policy.vocab, M);

  std::size_t n_traj = 0;
  for (const auto& g : groups) {
    if (!g.advantages || g.advantages->size() != g.trajectories.size())
      throw ProtocolError("surrogate_loss: group lacks advantages");
    n_traj += g.trajectories.size();
  }
  if (n_traj == 0) throw ProtocolError("surrogate_loss: empty batch");
  if (old_policy_logprobs.size() != n_traj)
    throw ProtocolError("surrogate_loss: logprob rows do not match trajectory count");

  SurrogateResult res;
  Eigen::MatrixXd grad_M = Eigen::MatrixXd::Zero(M.rows(), M.cols());
  double loss = 0.0;
  int clipped_selected = 0;
  std::size_t flat = 0;

  for (const auto& g : groups) {
    for (std::size_t k = 0; k < g.trajectories.size(); ++k, ++flat) {
      const double adv = (*g.advantages)[k];
      const auto prompts = action_prompts(policy.system_prompt, g.trajectories[k]);
      const std::vector<double>& old_lps = old_policy_logprobs[flat];
      if (old_lps.size() != prompts.size())
        throw ProtocolError("surrogate_loss: trajectory " + std::to_string(flat) + " has " +
                            std::to_string(prompts.size()) + " action tokens but " +
                            std::to_string(old_lps.size()) + " stored logprobs");
      if (prompts.empty()) continue;  // no action tokens, no contribution
      const double T = static_cast<double>(prompts.size());
      // -1/(|B|*T): gradient ascends the clipped objective.
      const double coef = -1.0 / (static_cast<double>(n_traj) * T);

      for (std::size_t j = 0; j < prompts.size(); ++j) {
        const auto& [prompt, token] = prompts[j];
        auto idx = rp.token_index(token);
        if (!idx)
          throw ProtocolError("action token '" + token + "' is not in the policy vocab");
        const Eigen::VectorXd phi = featurize(prompt, dim);
        const Eigen::VectorXd z = (M * phi) / tau;
        const Eigen::VectorXd lsm = log_softmax(z);
        const double rho = std::exp(lsm[*idx] - old_lps[j]);
        const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
        ++res.token_count;
        if (rho * adv <= clipped * adv) {
          // Unclipped branch selected (ties included): gradient flows
          // through rho.
          loss += coef * rho * adv;
          const Eigen::VectorXd p = lsm.array().exp();
          Eigen::VectorXd dlogp = -p;
          dlogp[*idx] += 1.0;
          grad_M.noalias() += (coef * adv * rho / tau) * dlogp * phi.transpose();
        } else {
          // Clipped branch: constant in the parameters, zero gradient.
          loss += coef * clipped * adv;
          ++clipped_selected;
        }
      }
    }
  }

  res.loss = loss;
  res.grad_A = policy.adapter.B.transpose() * grad_M;
  res.grad_B = grad_M * policy.adapter.A.transpose();
  res.clip_fraction =
      res.token_count == 0 ? 0.0 : static_cast<double>(clipped_selected) / res.token_count;
  return res;
}

namespace {

std::vector<std::string> probe_vocab(const env::EnvRegistry& reg, const std::string& env_name,
                                     std::uint64_t seed) {
  auto probe = reg.make(env_name);
  probe->reset(seed);
  std::vector<std::string> vocab = probe->legal_actions();
  if (vocab.empty())
    throw ConfigError("environment '" + env_name +
                      "' has a free-form action space; the built-in trainable policy needs an "
                      "enumerable action vocabulary");
  return vocab;
}

}  // namespace

TrainOutcome train_capability(const env::EnvRegistry& reg, const std::string& env_name,
                              const std::string& capability_id,
                              const Eigen::MatrixXd& base_weights, const TrainerConfig& config,
                              std::uint64_t seed) {
  config.validate();
  const env::EnvSpec& spec = reg.spec(env_name);
  std::vector<std::string> vocab = probe_vocab(reg, env_name, seed);
  if (base_weights.rows() != static_cast<Eigen::Index>(vocab.size()) ||
      base_weights.cols() != config.feature_dim)
    throw ConfigError("trainer: base weights must be |vocab| x feature_dim");

  TrainableAdapterPolicy pol;
  pol.vocab = std::move(vocab);
  pol.base_weights = base_weights;
  pol.adapter = adapters::init_lora(seed, capability_id, static_cast<int>(pol.vocab.size()),
                                    config.feature_dim, config.rank);
  pol.adapter.train_env = env_name;
  pol.adapter.train_seed = seed;
  pol.system_prompt = spec.system_prompt;
  pol.temperature = config.rollout_temperature;

  rollout::RolloutOptions opts;
  opts.group_seeds.reserve(config.groups_per_iter);
  // Fixed scenario seeds and fixed policy-stream seeds across iterations:
  // successive waves differ only through the policy update, so identical
  // policies replay identical waves.
  for (int g = 0; g < config.groups_per_iter; ++g)
    opts.group_seeds.push_back(seed + static_cast<std::uint64_t>(g));
  opts.group_size = config.group_size;
  opts.max_steps = config.max_steps;
  opts.threads = config.threads;
  opts.global_seed = seed;
  opts.temperature = config.rollout_temperature;

  TrainOutcome out;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const SoftmaxAdapterPolicy rp = pol.rollout_policy();
    rollout::CollectResult waves = rollout::collect_groups(reg, env_name, rp, opts);
    if (!waves.failures.empty()) {
      out.aborted = true;
      out.abort_reason = "rollout failure at iteration " + std::to_string(iter) + ": " +
                         waves.failures.front().second;
      break;
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& g : waves.groups)
      for (double r : g.rewards) {
        sum += r;
        ++n;
      }
    out.history.push_back(n == 0 ? 0.0 : sum / n);

    std::vector<rollout::RolloutGroup> normalized;
    normalized.reserve(waves.groups.size());
    for (const auto& g : waves.groups)
      normalized.push_back(normalize_advantages(g, config.std_epsilon));
    std::vector<rollout::RolloutGroup> informative = filter_informative(normalized);
    if (informative.empty()) {
      ++out.wasted_iterations;
      continue;
    }

    SurrogateResult sr;
    try {
      const TokenLogprobs old_lps = action_logprobs(pol, informative);
      sr = surrogate_loss(pol, old_lps, informative, config.clip_epsilon);
    } catch (const ProtocolError& e) {
      out.aborted = true;
      out.abort_reason = std::string("loss failure at iteration ") + std::to_string(iter) +
                         ": " + e.what();
      break;
    }
    if (!std::isfinite(sr.loss) || !sr.grad_A.allFinite() || !sr.grad_B.allFinite()) {
      out.aborted = true;
      out.abort_reason = "non-finite loss or gradient at iteration " + std::to_string(iter);
      break;
    }
    pol.adapter.A.noalias() -= config.learning_rate * sr.grad_A;
    pol.adapter.B.noalias() -= config.learning_rate * sr.grad_B;
  }
  out.adapter = pol.adapter;
  return out;
}

TrainOutcome train_capability(const env::EnvRegistry& reg, const std::string& env_name,
                              const std::string& capability_id, const TrainerConfig& config,
                              std::uint64_t seed) {
  config.validate();
  std::vector<std::string> vocab = probe_vocab(reg, env_name, seed);
  const SoftmaxAdapterPolicy base =
      make_copy_policy(std::move(vocab), config.feature_dim, config.base_strength);
  return train_capability(reg, env_name, capability_id, base.weights(), config, seed);
}

}  // namespace caprl::grpo
