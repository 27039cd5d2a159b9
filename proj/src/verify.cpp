#include "caprl/rollout/verify.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace caprl::rollout {

namespace {

std::string bucket_label(double reward) {
  const int b = static_cast<int>(std::lround(reward * 10.0));
  std::ostringstream os;
  os << (b / 10) << "." << (b % 10);
  return os.str();
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Episode tag used for the per-skill breakdown, most specific available.
std::string skill_tag(const std::map<std::string, std::string>& meta) {
  for (const char* key : {"skill", "family", "task_type"}) {
    auto it = meta.find(key);
    if (it != meta.end()) return it->second;
  }
  return "all";
}

std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

VerificationReport verify_environment(const env::EnvRegistry& reg, const std::string& env_name,
                                      const PolicyFactory& make_policy, std::uint64_t seed,
                                      const VerifyOptions& opts) {
  if (opts.episodes < 2) throw ConfigError("verify: episodes must be >= 2");
  if (opts.n_groups < 1 || opts.group_size < 2) {
    throw ConfigError("verify: need n_groups >= 1 and group_size >= 2");
  }
  VerificationReport rep;
  rep.env_name = env_name;

  // Phase 1: independent scenarios, one rollout each.
  RolloutOptions single;
  single.n_groups = opts.episodes;
  single.group_size = 1;
  single.max_steps = opts.max_steps;
  single.threads = opts.threads;
  single.global_seed = seed;
  single.temperature = opts.temperature;
  CollectResult singles = collect_groups(reg, env_name, make_policy, single);
  if (!singles.failures.empty()) {
    throw ProtocolError("verify: rollout failed for scenario seed " +
                        std::to_string(singles.failures.front().first) + ": " +
                        singles.failures.front().second);
  }

  double sum = 0.0, sumsq = 0.0;
  std::map<std::string, double> skill_sum;
  for (const auto& grp : singles.groups) {
    const env::Trajectory& t = grp.trajectories.front();
    sum += t.reward;
    sumsq += t.reward * t.reward;
    rep.histogram[bucket_label(t.reward)] += 1;
    const std::string tag = skill_tag(t.metadata);
    skill_sum[tag] += t.reward;
    rep.per_skill_count[tag] += 1;
  }
  rep.episodes = static_cast<int>(singles.groups.size());
  const double n = static_cast<double>(rep.episodes);
  rep.mean = sum / n;
  const double var = std::max(0.0, sumsq / n - rep.mean * rep.mean);
  rep.stddev = std::sqrt(var);
  for (const auto& [tag, s] : skill_sum) {
    rep.per_skill_mean[tag] = s / rep.per_skill_count[tag];
  }

  // Phase 2: grouped scenarios; scenario seeds continue past phase 1.
  RolloutOptions grouped;
  grouped.n_groups = opts.n_groups;
  grouped.group_size = opts.group_size;
  grouped.max_steps = opts.max_steps;
  grouped.threads = opts.threads;
  grouped.global_seed = seed + static_cast<std::uint64_t>(opts.episodes);
  grouped.temperature = opts.temperature;
  CollectResult groups = collect_groups(reg, env_name, make_policy, grouped);
  if (!groups.failures.empty()) {
    throw ProtocolError("verify: rollout failed for group seed " +
                        std::to_string(groups.failures.front().first) + ": " +
                        groups.failures.front().second);
  }
  rep.groups = static_cast<int>(groups.groups.size());
  for (const auto& grp : groups.groups) {
    std::set<double> distinct;
    for (const auto& t : grp.trajectories) distinct.insert(round2(t.reward));
    if (distinct.size() > 1) rep.informative_groups += 1;
  }
  rep.informative_fraction =
      rep.groups == 0 ? 0.0 : static_cast<double>(rep.informative_groups) / rep.groups;

  if (rep.mean < 0.3 || rep.mean > 0.6) {
    rep.warnings.push_back("mean reward " + fmt(rep.mean) + " outside target band [0.3, 0.6]");
  }
  if (rep.stddev <= 0.2) {
    rep.warnings.push_back("reward stddev " + fmt(rep.stddev) + " not above 0.2");
  }
  if (rep.informative_fraction <= 0.6) {
    rep.warnings.push_back("informative group fraction " + fmt(rep.informative_fraction) +
                           " not above 0.6");
  }
  rep.ok = rep.warnings.empty();
  return rep;
}

VerificationReport verify_environment(const env::EnvRegistry& reg, const std::string& env_name,
                                      const env::AgentPolicy& policy, std::uint64_t seed,
                                      const VerifyOptions& opts) {
  return verify_environment(reg, env_name, shared_policy(policy), seed, opts);
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  os << "environment: " << env_name << "\n";
  os << "episodes: " << episodes << "  mean: " << fmt(mean) << "  stddev: " << fmt(stddev)
     << "\n";
  os << "histogram (reward rounded to 0.1):\n";
  for (const auto& [bucket, count] : histogram) {
    os << "  " << bucket << ": " << count << "\n";
  }
  os << "groups: " << groups << "  informative: " << informative_groups << " ("
     << fmt(informative_fraction) << ")\n";
  if (!per_skill_mean.empty()) {
    os << "per-skill mean reward:\n";
    for (const auto& [tag, m] : per_skill_mean) {
      os << "  " << tag << ": " << fmt(m) << " (n=" << per_skill_count.at(tag) << ")\n";
    }
  }
  if (warnings.empty()) {
    os << "status: ok\n";
  } else {
    os << "status: needs attention\n";
    for (const auto& w : warnings) os << "  warning: " << w << "\n";
  }
  return os.str();
}

nlohmann::json VerificationReport::to_json() const {
  return {{"env", env_name},
          {"episodes", episodes},
          {"mean", mean},
          {"stddev", stddev},
          {"histogram", histogram},
          {"groups", groups},
          {"informative_groups", informative_groups},
          {"informative_fraction", informative_fraction},
          {"per_skill_mean", per_skill_mean},
          {"per_skill_count", per_skill_count},
          {"warnings", warnings},
          {"ok", ok}};
}

}  // namespace caprl::rollout
