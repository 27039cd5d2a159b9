#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "caprl/env/trajectory.hpp"

namespace caprl::analysis {

// Per-(capability, trajectory) verdict: NA when the capability is not needed
// for the task, otherwise whether it was exercised.
enum class CapLabel { kNA, kPresent, kLacking };

const char* label_name(CapLabel label);
// Tolerant parse (trim + case-fold): "NA" / "PRESENT" / "LACKING".
std::optional<CapLabel> parse_label(const std::string& text);

// Stable key for one trajectory inside a dataset.
std::string trajectory_uid(const env::Trajectory& traj);

struct CapabilityCard {
  std::string id;
  std::string name;
  std::string description;
  std::map<std::string, CapLabel> labels;  // trajectory uid -> label
};

struct CapabilityStats {
  double er_success = 0.0;  // LACKING rate among applicable successes
  double er_fail = 0.0;     // LACKING rate among applicable failures
  double gap = 0.0;         // er_fail - er_success
  double coverage = 0.0;    // LACKING-and-failed over all failures
  int n_applicable_success = 0;
  int n_applicable_fail = 0;
  // Zero-denominator flags; the corresponding rate is defined as 0, so a
  // vacuous capability can never clear the retention thresholds.
  bool vacuous_success = false;
  bool vacuous_fail = false;
  bool vacuous_coverage = false;
};

class Discoverer {
 public:
  virtual ~Discoverer() = default;
  // Proposes unlabeled cards from the dataset. May throw TransportError.
  virtual std::vector<CapabilityCard> discover(const std::vector<env::Trajectory>& data) = 0;
};

class Labeler {
 public:
  virtual ~Labeler() = default;
  // Raw label text; validated (and retried once on junk) by label_cards.
  virtual std::string label(const CapabilityCard& card, const env::Trajectory& traj,
                            int attempt) = 0;
};

std::pair<std::vector<env::Trajectory>, std::vector<env::Trajectory>> split_dataset(
    const std::vector<env::Trajectory>& data);

// Runs the discoverer and deduplicates by id (first wins). Empty dataset
// yields an empty dictionary without consulting the discoverer.
std::vector<CapabilityCard> discover(const std::vector<env::Trajectory>& data,
                                     Discoverer& discoverer);

// Labels every (card, trajectory) pair. Output outside the label set is
// retried once, then recorded NA.
std::vector<CapabilityCard> label_cards(std::vector<CapabilityCard> cards,
                                        const std::vector<env::Trajectory>& data,
                                        Labeler& labeler);

// Contrastive rates for one fully labeled card. Throws ProtocolError when a
// label references a trajectory outside the dataset or a pair is unlabeled.
CapabilityStats compute_stats(const CapabilityCard& card,
                              const std::vector<env::Trajectory>& data);

inline constexpr double kDefaultDelta = 0.20;  // minimum contrastive gap
inline constexpr double kDefaultRho = 0.10;    // minimum failure coverage

// Ids with gap >= delta and coverage >= rho, sorted.
std::vector<std::string> retain(const std::map<std::string, CapabilityStats>& stats_by_card,
                                double delta = kDefaultDelta, double rho = kDefaultRho);

inline constexpr double kDefaultMinFraction = 0.8;

// Ids retained in at least min_fraction of runs, sorted. Requires >= 1 run.
std::vector<std::string> consistency_filter(const std::vector<std::set<std::string>>& runs,
                                            double min_fraction = kDefaultMinFraction);

struct AnalysisOptions {
  int runs = 1;
  double delta = kDefaultDelta;
  double rho = kDefaultRho;
  double min_fraction = kDefaultMinFraction;
};

struct AnalysisRun {
  std::vector<CapabilityCard> labeled_cards;
  std::map<std::string, CapabilityStats> stats;
  std::vector<std::string> retained;
};

struct AnalysisResult {
  std::vector<CapabilityCard> dictionary;  // discovery output (unlabeled)
  std::vector<AnalysisRun> runs;
  std::vector<std::string> final_ids;  // after the consistency filter
  std::map<std::string, int> selection_counts;

  nlohmann::json to_json() const;
  // One row per card: id, name, selection counts, mean rates, final status.
  std::string to_csv() const;
};

// Discovery once, then `runs` labeling+stats passes, then the consistency
// filter over the per-run retained sets.
AnalysisResult analyze_dataset(const std::vector<env::Trajectory>& data, Discoverer& discoverer,
                               Labeler& labeler, const AnalysisOptions& opts);

// --- deterministic rule-table implementations (tests, planted pipelines) ---

// Discovers planted capabilities from trajectory metadata: every key of the
// form "cap.<id>" contributes a card, as does every drill task family seen
// under the "family" tag.
class RuleBasedDiscoverer : public Discoverer {
 public:
  std::vector<CapabilityCard> discover(const std::vector<env::Trajectory>& data) override;
};

// Reads planted "cap.<id>" metadata verbatim; for drill cards ("family.<f>")
// answers NA off-family, else PRESENT/LACKING by comparing the final action
// against the tagged target. Optionally garbles the first attempt for a
// given capability id to exercise the retry path.
class RuleBasedLabeler : public Labeler {
 public:
  RuleBasedLabeler() = default;
  explicit RuleBasedLabeler(std::string garble_first_attempt_id)
      : garble_id_(std::move(garble_first_attempt_id)) {}
  std::string label(const CapabilityCard& card, const env::Trajectory& traj,
                    int attempt) override;

 private:
  std::string garble_id_;
};

}  // namespace caprl::analysis

namespace caprl::gateway {
class Gateway;
}

namespace caprl::analysis {

// Remote-LLM discovery/labeling plumbing. The prompt wording is authored
// here and carries no grading weight; tests drive these through the scripted
// mock gateway.
class LlmDiscoverer : public Discoverer {
 public:
  LlmDiscoverer(gateway::Gateway& gw, std::string model, int max_examples = 8);
  std::vector<CapabilityCard> discover(const std::vector<env::Trajectory>& data) override;

 private:
  gateway::Gateway& gw_;
  std::string model_;
  int max_examples_;
};

class LlmLabeler : public Labeler {
 public:
  LlmLabeler(gateway::Gateway& gw, std::string model);
  std::string label(const CapabilityCard& card, const env::Trajectory& traj,
                    int attempt) override;

 private:
  gateway::Gateway& gw_;
  std::string model_;
};

}  // namespace caprl::analysis
