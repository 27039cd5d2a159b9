#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "caprl/env/trajectory.hpp"

namespace caprl::metrics {

struct DomainRate {
  std::string domain;
  int solved = 0;
  int total = 0;
  double rate = 0.0;
};

struct PassRates {
  std::vector<DomainRate> per_domain;
  int solved = 0;
  int total = 0;
  double overall = 0.0;
};

// Exact fractions; errors on totals <= 0, negative solved, or solved > total.
PassRates pass_rate(const std::vector<int>& solved_by_domain,
                    const std::vector<int>& totals_by_domain,
                    const std::vector<std::string>& domain_names = {});

// "47.0%" style rendering, one decimal place.
std::string percent_label(double rate);

struct SimilarityMetrics {
  double mean = 0.0;
  double perfect_rate = 0.0;  // scores exactly 1.0; near-misses never count
  int count = 0;
};

// Errors on scores outside [0,1]. Empty input yields zeros.
SimilarityMetrics similarity_metrics(const std::vector<double>& scores);

struct EvalSummary {
  std::vector<DomainRate> per_domain;
  double pass_rate = 0.0;
  double mean_similarity = 0.0;
  double perfect_rate = 0.0;
  int rollout_count = 0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Domains come from trajectory metadata ("domain", falling back to the task
// family tag, then the environment name); similarity scores are the rewards.
EvalSummary summarize_eval(const std::vector<env::Trajectory>& trajectories);

// One training curve: cumulative rollouts = iteration * group_size *
// groups_per_iter.
struct TrainingHistory {
  std::string label;
  int group_size = 0;
  int groups_per_iter = 0;
  std::vector<double> mean_rewards;
};

// One point for the capabilities-vs-score curve.
struct CapabilityPoint {
  std::string label;
  int n_capabilities = 0;
  double score = 0.0;
};

// Writes rollouts_vs_score.csv and capabilities_vs_score.csv under out_dir
// (headers only when the inputs are empty). Duplicate labels get _2, _3, ...
// suffixes. Throws ProtocolError when the directory is unwritable.
void emit_report(const std::vector<TrainingHistory>& histories,
                 const std::vector<CapabilityPoint>& points,
                 const std::filesystem::path& out_dir);

}  // namespace caprl::metrics
