#include "caprl/metrics/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "caprl/common.hpp"

namespace caprl::metrics {

using nlohmann::json;

PassRates pass_rate(const std::vector<int>& solved_by_domain,
                    const std::vector<int>& totals_by_domain,
                    const std::vector<std::string>& domain_names) {
  if (solved_by_domain.size() != totals_by_domain.size())
    throw ProtocolError("pass_rate: solved and total lists differ in length");
  if (!domain_names.empty() && domain_names.size() != solved_by_domain.size())
    throw ProtocolError("pass_rate: domain name list has the wrong length");
  PassRates out;
  for (std::size_t i = 0; i < solved_by_domain.size(); ++i) {
    const int s = solved_by_domain[i];
    const int n = totals_by_domain[i];
    if (n <= 0) throw ProtocolError("pass_rate: domain total must be positive");
    if (s < 0 || s > n)
      throw ProtocolError("pass_rate: solved count " + std::to_string(s) +
                          " outside [0, " + std::to_string(n) + "]");
    DomainRate d;
    d.domain = domain_names.empty() ? "domain_" + std::to_string(i) : domain_names[i];
    d.solved = s;
    d.total = n;
    d.rate = static_cast<double>(s) / n;
    out.per_domain.push_back(std::move(d));
    out.solved += s;
    out.total += n;
  }
  out.overall = out.total == 0 ? 0.0 : static_cast<double>(out.solved) / out.total;
  return out;
}

std::string percent_label(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", rate * 100.0);
  return buf;
}

SimilarityMetrics similarity_metrics(const std::vector<double>& scores) {
  SimilarityMetrics m;
  m.count = static_cast<int>(scores.size());
  if (scores.empty()) return m;
  double sum = 0.0;
  int perfect = 0;
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0))
      throw ProtocolError("similarity score outside [0,1]: " + std::to_string(s));
    sum += s;
    if (s == 1.0) ++perfect;  // exact: 0.9999999 is not perfect
  }
  m.mean = sum / static_cast<double>(scores.size());
  m.perfect_rate = static_cast<double>(perfect) / static_cast<double>(scores.size());
  return m;
}

EvalSummary summarize_eval(const std::vector<env::Trajectory>& trajectories) {
  std::map<std::string, std::pair<int, int>> by_domain;  // domain -> (solved, total)
  std::vector<double> scores;
  scores.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    std::string domain = t.env_name;
    if (auto it = t.metadata.find("domain"); it != t.metadata.end()) {
      domain = it->second;
    } else if (auto fam = t.metadata.find("family"); fam != t.metadata.end()) {
      domain = fam->second;
    }
    auto& [solved, total] = by_domain[domain];
    solved += t.success ? 1 : 0;
    total += 1;
    scores.push_back(t.reward);
  }

  EvalSummary s;
  s.rollout_count = static_cast<int>(trajectories.size());
  int solved_sum = 0;
  for (const auto& [domain, counts] : by_domain) {
    DomainRate d;
    d.domain = domain;
    d.solved = counts.first;
    d.total = counts.second;
    d.rate = counts.second == 0 ? 0.0 : static_cast<double>(counts.first) / counts.second;
    solved_sum += counts.first;
    s.per_domain.push_back(std::move(d));
  }
  s.pass_rate = trajectories.empty()
                    ? 0.0
                    : static_cast<double>(solved_sum) / static_cast<double>(trajectories.size());
  const SimilarityMetrics sim = similarity_metrics(scores);
  s.mean_similarity = sim.mean;
  s.perfect_rate = sim.perfect_rate;
  return s;
}

json EvalSummary::to_json() const {
  json domains = json::array();
  for (const auto& d : per_domain)
    domains.push_back(
        json{{"domain", d.domain}, {"solved", d.solved}, {"total", d.total}, {"rate", d.rate}});
  return json{{"per_domain", domains},
              {"pass_rate", pass_rate},
              {"mean_similarity", mean_similarity},
              {"perfect_rate", perfect_rate},
              {"rollout_count", rollout_count}};
}

std::string EvalSummary::to_text() const {
  std::ostringstream out;
  out << "rollouts: " << rollout_count << "\n";
  for (const auto& d : per_domain)
    out << "  " << d.domain << ": " << d.solved << "/" << d.total << " ("
        << percent_label(d.rate) << ")\n";
  out << "pass rate:       " << percent_label(pass_rate) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "mean similarity: %.3f\n", mean_similarity);
  out << buf;
  std::snprintf(buf, sizeof(buf), "perfect rate:    %.3f\n", perfect_rate);
  out << buf;
  return out.str();
}

namespace {

// label, label_2, label_3, ... for repeated labels.
class LabelDeduper {
 public:
  std::string unique(const std::string& label) {
    const int n = ++seen_[label];
    if (n == 1) return label;
    return label + "_" + std::to_string(n);
  }

 private:
  std::map<std::string, int> seen_;
};

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ProtocolError("cannot write report file: " + path.string());
  return out;
}

}  // namespace

void emit_report(const std::vector<TrainingHistory>& histories,
                 const std::vector<CapabilityPoint>& points,
                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  {
    auto out = open_csv(out_dir / "rollouts_vs_score.csv");
    out << "label,rollouts,score\n";
    LabelDeduper dedup;
    for (const auto& h : histories) {
      const std::string label = dedup.unique(h.label);
      const long long per_iter =
          static_cast<long long>(h.group_size) * static_cast<long long>(h.groups_per_iter);
      for (std::size_t i = 0; i < h.mean_rewards.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.6f", h.mean_rewards[i]);
        out << label << ',' << per_iter * static_cast<long long>(i + 1) << ',' << buf << "\n";
      }
    }
  }
  {
    auto out = open_csv(out_dir / "capabilities_vs_score.csv");
    out << "label,n_capabilities,score\n";
    LabelDeduper dedup;
    for (const auto& p : points) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%.6f", p.score);
      out << dedup.unique(p.label) << ',' << p.n_capabilities << ',' << buf << "\n";
    }
  }
}

}  // namespace caprl::metrics
