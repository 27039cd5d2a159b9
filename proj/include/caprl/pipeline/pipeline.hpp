#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "caprl/analysis/analysis.hpp"
#include "caprl/config/config.hpp"
#include "caprl/gateway/gateway.hpp"
#include "caprl/grpo/grpo.hpp"
#include "caprl/metrics/metrics.hpp"
#include "caprl/routing/routing.hpp"

namespace caprl::pipeline {

struct PipelineOptions {
  std::uint64_t seed = 0;
  std::string env = "skill_mix_game";
  std::filesystem::path out_dir = "pipeline_out";
  int n_task_groups = 25;  // collection stage: scenario seeds
  int group_size = 8;      // replicates per scenario
  int eval_tasks = 100;
  int threads = 1;
  int max_steps = 8;
  double temperature = 1.0;

  int analysis_runs = 10;
  double delta = analysis::kDefaultDelta;
  double rho = analysis::kDefaultRho;
  double min_fraction = analysis::kDefaultMinFraction;

  grpo::TrainerConfig trainer;

  // Empty endpoint selects the deterministic mock gateway.
  std::string gateway_endpoint;
  std::string gateway_model = "local-model";
  std::uint64_t mock_seed = 0;

  void validate() const;
};

// Parses and schema-checks the [pipeline]/[rollout]/[analysis]/[trainer]/
// [gateway] sections; unknown sections or keys are ConfigErrors.
PipelineOptions pipeline_options_from_config(const config::Config& cfg);

struct PipelineResult {
  std::vector<std::string> deficit_ids;
  metrics::EvalSummary base_eval;
  metrics::EvalSummary routed_eval;
  double pass_gain = 0.0;  // routed - base pass rate
  std::filesystem::path out_dir;
};

// The full loop: collect -> analyze -> train one adapter per retained deficit
// -> routed eval against the base policy, all under out_dir. Stages that find
// their artifact already on disk reuse it, so interrupted runs resume and
// reruns are byte-identical. Failures carry the stage name in the message.
PipelineResult run_pipeline(const PipelineOptions& opts, std::ostream& log);

// Shared helpers (also used by the eval/route CLI commands).
grpo::SoftmaxAdapterPolicy base_policy_for_env(const env::EnvRegistry& reg,
                                               const std::string& env_name,
                                               const grpo::TrainerConfig& trainer,
                                               std::uint64_t seed);

nlohmann::json routing_cards_to_json(const std::vector<routing::RoutingCard>& cards);
std::vector<routing::RoutingCard> routing_cards_from_json(const nlohmann::json& j);

}  // namespace caprl::pipeline
