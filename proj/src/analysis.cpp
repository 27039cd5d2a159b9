#include "caprl/analysis/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "caprl/common.hpp"
#include "caprl/gateway/gateway.hpp"

namespace caprl::analysis {

using nlohmann::json;

const char* label_name(CapLabel label) {
  switch (label) {
    case CapLabel::kNA: return "NA";
    case CapLabel::kPresent: return "PRESENT";
    case CapLabel::kLacking: return "LACKING";
  }
  return "NA";
}

std::optional<CapLabel> parse_label(const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (t == "NA") return CapLabel::kNA;
  if (t == "PRESENT") return CapLabel::kPresent;
  if (t == "LACKING") return CapLabel::kLacking;
  return std::nullopt;
}

std::string trajectory_uid(const env::Trajectory& traj) {
  return traj.task_id + "#" + std::to_string(traj.episode_seed);
}

std::pair<std::vector<env::Trajectory>, std::vector<env::Trajectory>> split_dataset(
    const std::vector<env::Trajectory>& data) {
  std::pair<std::vector<env::Trajectory>, std::vector<env::Trajectory>> out;
  for (const auto& t : data) (t.success ? out.first : out.second).push_back(t);
  return out;
}

std::vector<CapabilityCard> discover(const std::vector<env::Trajectory>& data,
                                     Discoverer& discoverer) {
  if (data.empty()) return {};
  std::vector<CapabilityCard> raw = discoverer.discover(data);
  std::vector<CapabilityCard> out;
  for (auto& card : raw) {
    if (card.id.empty()) throw ProtocolError("discoverer produced a card without an id");
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const CapabilityCard& c) { return c.id == card.id; });
    if (!dup) out.push_back(std::move(card));
  }
  return out;
}

std::vector<CapabilityCard> label_cards(std::vector<CapabilityCard> cards,
                                        const std::vector<env::Trajectory>& data,
                                        Labeler& labeler) {
  for (auto& card : cards) {
    if (!card.labels.empty()) throw ProtocolError("label_cards: card already labeled");
    for (const auto& traj : data) {
      std::optional<CapLabel> lab = parse_label(labeler.label(card, traj, 0));
      if (!lab) lab = parse_label(labeler.label(card, traj, 1));
      card.labels[trajectory_uid(traj)] = lab.value_or(CapLabel::kNA);
    }
  }
  return cards;
}

CapabilityStats compute_stats(const CapabilityCard& card,
                              const std::vector<env::Trajectory>& data) {
  std::map<std::string, bool> outcome;  // uid -> success
  for (const auto& t : data) outcome[trajectory_uid(t)] = t.success;
  if (outcome.size() != data.size())
    throw ProtocolError("compute_stats: duplicate trajectory uid in dataset");

  int napp_succ = 0, nlack_succ = 0, napp_fail = 0, nlack_fail = 0, nfail = 0;
  for (const auto& [uid, succ] : outcome) {
    auto it = card.labels.find(uid);
    if (it == card.labels.end())
      throw ProtocolError("compute_stats: card '" + card.id + "' is missing a label for " + uid);
    if (!succ) ++nfail;
    if (it->second == CapLabel::kNA) continue;
    const bool lacking = it->second == CapLabel::kLacking;
    if (succ) {
      ++napp_succ;
      nlack_succ += lacking ? 1 : 0;
    } else {
      ++napp_fail;
      nlack_fail += lacking ? 1 : 0;
    }
  }
  for (const auto& [uid, lab] : card.labels) {
    if (!outcome.count(uid))
      throw ProtocolError("compute_stats: label for unknown trajectory " + uid);
    (void)lab;
  }

  CapabilityStats s;
  s.n_applicable_success = napp_succ;
  s.n_applicable_fail = napp_fail;
  s.vacuous_success = napp_succ == 0;
  s.vacuous_fail = napp_fail == 0;
  s.vacuous_coverage = nfail == 0;
  s.er_success = s.vacuous_success ? 0.0 : static_cast<double>(nlack_succ) / napp_succ;
  s.er_fail = s.vacuous_fail ? 0.0 : static_cast<double>(nlack_fail) / napp_fail;
  s.gap = s.er_fail - s.er_success;
  s.coverage = s.vacuous_coverage ? 0.0 : static_cast<double>(nlack_fail) / nfail;
  return s;
}

std::vector<std::string> retain(const std::map<std::string, CapabilityStats>& stats_by_card,
                                double delta, double rho) {
  std::vector<std::string> out;
  for (const auto& [id, s] : stats_by_card) {
    if (s.vacuous_fail || s.vacuous_coverage) continue;  // cannot account for failures
    if (s.gap >= delta && s.coverage >= rho) out.push_back(id);
  }
  return out;  // map iteration is already id-sorted
}

std::vector<std::string> consistency_filter(const std::vector<std::set<std::string>>& runs,
                                            double min_fraction) {
  if (runs.empty()) throw ProtocolError("consistency_filter: need at least one run");
  std::map<std::string, int> counts;
  for (const auto& run : runs)
    for (const auto& id : run) ++counts[id];
  std::vector<std::string> out;
  const double r = static_cast<double>(runs.size());
  for (const auto& [id, n] : counts)
    if (static_cast<double>(n) / r >= min_fraction) out.push_back(id);
  return out;
}

AnalysisResult analyze_dataset(const std::vector<env::Trajectory>& data, Discoverer& discoverer,
                               Labeler& labeler, const AnalysisOptions& opts) {
  if (opts.runs < 1) throw ConfigError("analysis: runs must be >= 1");
  if (!(opts.min_fraction > 0.0 && opts.min_fraction <= 1.0))
    throw ConfigError("analysis: min_fraction must lie in (0,1]");

  AnalysisResult res;
  res.dictionary = discover(data, discoverer);
  std::vector<std::set<std::string>> retained_sets;
  for (int r = 0; r < opts.runs; ++r) {
    AnalysisRun run;
    run.labeled_cards = label_cards(res.dictionary, data, labeler);
    for (const auto& card : run.labeled_cards) run.stats[card.id] = compute_stats(card, data);
    run.retained = retain(run.stats, opts.delta, opts.rho);
    retained_sets.emplace_back(run.retained.begin(), run.retained.end());
    res.runs.push_back(std::move(run));
  }
  for (const auto& s : retained_sets)
    for (const auto& id : s) ++res.selection_counts[id];
  if (!retained_sets.empty())
    res.final_ids = consistency_filter(retained_sets, opts.min_fraction);
  return res;
}

namespace {

json stats_to_json(const CapabilityStats& s) {
  return json{{"er_success", s.er_success},
              {"er_fail", s.er_fail},
              {"gap", s.gap},
              {"coverage", s.coverage},
              {"n_applicable_success", s.n_applicable_success},
              {"n_applicable_fail", s.n_applicable_fail},
              {"vacuous_success", s.vacuous_success},
              {"vacuous_fail", s.vacuous_fail},
              {"vacuous_coverage", s.vacuous_coverage}};
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (char c : raw) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

json AnalysisResult::to_json() const {
  json cards = json::array();
  for (const auto& card : dictionary) {
    json c{{"id", card.id}, {"name", card.name}, {"description", card.description}};
    json per_run = json::array();
    for (const auto& run : runs) {
      auto it = run.stats.find(card.id);
      per_run.push_back(it == run.stats.end() ? json() : stats_to_json(it->second));
    }
    c["stats_by_run"] = per_run;
    auto sel = selection_counts.find(card.id);
    c["runs_selected"] = sel == selection_counts.end() ? 0 : sel->second;
    c["retained"] =
        std::find(final_ids.begin(), final_ids.end(), card.id) != final_ids.end();
    cards.push_back(std::move(c));
  }
  json per_run_retained = json::array();
  for (const auto& run : runs) per_run_retained.push_back(run.retained);
  return json{{"cards", cards},
              {"runs", static_cast<int>(runs.size())},
              {"per_run_retained", per_run_retained},
              {"final_ids", final_ids}};
}

std::string AnalysisResult::to_csv() const {
  std::ostringstream out;
  out << "capability_id,name,runs_selected,runs_total,er_success_mean,er_fail_mean,gap_mean,"
         "coverage_mean,retained\n";
  std::vector<const CapabilityCard*> ordered;
  for (const auto& card : dictionary) ordered.push_back(&card);
  std::sort(ordered.begin(), ordered.end(),
            [](const CapabilityCard* a, const CapabilityCard* b) { return a->id < b->id; });
  for (const CapabilityCard* card : ordered) {
    double es = 0, ef = 0, gap = 0, cov = 0;
    int n = 0;
    for (const auto& run : runs) {
      auto it = run.stats.find(card->id);
      if (it == run.stats.end()) continue;
      es += it->second.er_success;
      ef += it->second.er_fail;
      gap += it->second.gap;
      cov += it->second.coverage;
      ++n;
    }
    const double d = n == 0 ? 1.0 : static_cast<double>(n);
    auto sel = selection_counts.find(card->id);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%zu,%.6f,%.6f,%.6f,%.6f",
                  sel == selection_counts.end() ? 0 : sel->second, runs.size(), es / d, ef / d,
                  gap / d, cov / d);
    const bool kept =
        std::find(final_ids.begin(), final_ids.end(), card->id) != final_ids.end();
    out << csv_field(card->id) << ',' << csv_field(card->name) << ',' << buf << ','
        << (kept ? "retained" : "rejected") << "\n";
  }
  return out.str();
}

// --- rule-table implementations ---

namespace {

std::string drill_family_description(const std::string& family) {
  if (family == "copy") return "echo the requested token verbatim";
  if (family == "partner") return "answer a partner cue with its paired response token";
  if (family == "successor") return "answer a successor cue with its next response token";
  return "handle " + family + " tasks";
}

// Last agent emission, or empty when the episode had none.
std::string final_action(const env::Trajectory& traj) {
  for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it)
    if (it->role == env::StepRole::kAction) return trim(it->text);
  return {};
}

}  // namespace

std::vector<CapabilityCard> RuleBasedDiscoverer::discover(
    const std::vector<env::Trajectory>& data) {
  std::set<std::string> planted;
  std::set<std::string> families;
  for (const auto& t : data) {
    for (const auto& [key, value] : t.metadata) {
      (void)value;
      if (key.rfind("cap.", 0) == 0 && key.size() > 4) planted.insert(key.substr(4));
      if (key == "family") families.insert(value);
    }
  }
  std::vector<CapabilityCard> cards;
  for (const auto& id : planted) {
    CapabilityCard c;
    c.id = id;
    c.name = id;
    c.description = "planted capability tracked by metadata key cap." + id;
    cards.push_back(std::move(c));
  }
  for (const auto& family : families) {
    CapabilityCard c;
    c.id = "family." + family;
    c.name = family + " rule";
    c.description = drill_family_description(family);
    cards.push_back(std::move(c));
  }
  return cards;
}

std::string RuleBasedLabeler::label(const CapabilityCard& card, const env::Trajectory& traj,
                                    int attempt) {
  if (!garble_id_.empty() && card.id == garble_id_ && attempt == 0) return "hmm, unclear";
  auto planted = traj.metadata.find("cap." + card.id);
  if (planted != traj.metadata.end()) return planted->second;
  if (card.id.rfind("family.", 0) == 0) {
    const std::string family = card.id.substr(7);
    auto fam = traj.metadata.find("family");
    auto target = traj.metadata.find("target");
    if (fam == traj.metadata.end() || fam->second != family || target == traj.metadata.end())
      return "NA";
    return final_action(traj) == target->second ? "PRESENT" : "LACKING";
  }
  return "NA";
}

// --- remote-LLM plumbing ---

LlmDiscoverer::LlmDiscoverer(gateway::Gateway& gw, std::string model, int max_examples)
    : gw_(gw), model_(std::move(model)), max_examples_(max_examples) {}

std::vector<CapabilityCard> LlmDiscoverer::discover(const std::vector<env::Trajectory>& data) {
  std::ostringstream body;
  body << "Below are agent transcripts with pass/fail outcomes. Propose a small dictionary of\n"
          "recurring capabilities whose absence explains the failures. Reply with a JSON array\n"
          "of objects with keys id, name, description and nothing else.\n\n";
  const int n = std::min<int>(max_examples_, static_cast<int>(data.size()));
  for (int i = 0; i < n; ++i) {
    const auto& t = data[i];
    body << "--- transcript " << i + 1 << " (" << (t.success ? "pass" : "fail") << ") ---\n"
         << t.full_text() << "\n";
  }
  gateway::ChatRequest req;
  req.model = model_;
  req.max_tokens = 1024;
  req.messages = {{"system", "You analyze agent transcripts for capability deficits."},
                  {"user", body.str()}};
  const std::string reply = gw_.complete(req);

  json parsed;
  try {
    parsed = json::parse(reply);
  } catch (const json::exception&) {
    const auto lo = reply.find('[');
    const auto hi = reply.rfind(']');
    if (lo == std::string::npos || hi == std::string::npos || hi < lo)
      throw ProtocolError("discoverer reply is not a JSON array");
    parsed = json::parse(reply.substr(lo, hi - lo + 1), nullptr, false);
    if (parsed.is_discarded()) throw ProtocolError("discoverer reply is not a JSON array");
  }
  if (!parsed.is_array()) throw ProtocolError("discoverer reply is not a JSON array");
  std::vector<CapabilityCard> cards;
  for (const auto& item : parsed) {
    CapabilityCard c;
    c.id = item.value("id", std::string{});
    c.name = item.value("name", c.id);
    c.description = item.value("description", std::string{});
    if (c.id.empty()) throw ProtocolError("discoverer card lacks an id");
    cards.push_back(std::move(c));
  }
  return cards;
}

LlmLabeler::LlmLabeler(gateway::Gateway& gw, std::string model)
    : gw_(gw), model_(std::move(model)) {}

std::string LlmLabeler::label(const CapabilityCard& card, const env::Trajectory& traj,
                              int attempt) {
  std::ostringstream body;
  body << "Capability: " << card.name << "\n"
       << card.description << "\n\n"
       << "Transcript (" << (traj.success ? "pass" : "fail") << "):\n"
       << traj.full_text() << "\n\n"
       << "Was this capability needed, and if needed, was it exercised? Answer NA when it was\n"
          "not needed, PRESENT when needed and exercised, LACKING when needed and missing.";
  if (attempt > 0) body << "\nYour previous reply was not one of NA, PRESENT, LACKING.";
  gateway::ChatRequest req;
  req.model = model_;
  req.messages = {{"system", "You grade one capability against one transcript."},
                  {"user", body.str()}};
  return gw_.choose(std::move(req), {"LACKING", "NA", "PRESENT"}).label;
}

}  // namespace caprl::analysis
