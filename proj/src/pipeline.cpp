#include "caprl/pipeline/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "caprl/env/trajectory.hpp"
#include "caprl/rollout/rollout.hpp"
#include "caprl/synth/builtin.hpp"

namespace caprl::pipeline {

using nlohmann::json;

namespace {

// Seed bands for the pipeline stages, offset so collection, exemplar probes,
// and evaluation never replay one another's scenarios.
constexpr std::uint64_t kEvalSeedOffset = 1'000'000;
constexpr std::uint64_t kExemplarSeedOffset = 2'000'000;
constexpr int kExemplarGroups = 8;
constexpr int kExemplarGroupSize = 4;

[[noreturn]] void stage_fail(const std::string& stage, const std::string& cause) {
  throw ProtocolError("stage " + stage + ": " + cause);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ProtocolError("cannot write " + path.string());
  out << text;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProtocolError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ProtocolError(path.string() + " is not valid JSON: " + e.what());
  }
  return j;
}

// Training environment for a capability id: "family.<f>" -> "<f>_drill".
std::string train_env_for(const std::string& capability_id) {
  if (capability_id.rfind("family.", 0) == 0) return capability_id.substr(7) + "_drill";
  throw ProtocolError("no training environment mapping for capability '" + capability_id +
                      "'");
}

}  // namespace

void PipelineOptions::validate() const {
  if (env.empty()) throw ConfigError("pipeline: env must be set");
  if (n_task_groups < 1) throw ConfigError("pipeline: n_task_groups must be >= 1");
  if (group_size < 2) throw ConfigError("pipeline: group_size must be >= 2");
  if (eval_tasks < 1) throw ConfigError("pipeline: eval_tasks must be >= 1");
  if (threads < 1) throw ConfigError("pipeline: threads must be >= 1");
  if (max_steps < 1) throw ConfigError("pipeline: max_steps must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("pipeline: temperature must be > 0");
  if (analysis_runs < 1) throw ConfigError("pipeline: analysis_runs must be >= 1");
  if (!(min_fraction > 0.0 && min_fraction <= 1.0))
    throw ConfigError("pipeline: min_fraction must lie in (0,1]");
  trainer.validate();
}

PipelineOptions pipeline_options_from_config(const config::Config& cfg) {
  cfg.require_known({
      {"pipeline",
       {"seed", "env", "out_dir", "n_task_groups", "group_size", "eval_tasks", "threads"}},
      {"rollout", {"max_steps", "temperature"}},
      {"analysis", {"runs", "delta", "rho", "min_fraction"}},
      {"trainer",
       {"learning_rate", "max_iterations", "clip_epsilon", "std_epsilon", "groups_per_iter",
        "group_size", "rollout_temperature", "rank", "feature_dim", "base_strength",
        "max_steps", "threads"}},
      {"gateway",
       {"endpoint", "model", "mock_seed", "timeout_ms", "max_retries", "max_in_flight",
        "audit_path"}},
  });

  PipelineOptions o;
  o.seed = cfg.get_u64("pipeline", "seed", o.seed);
  o.env = cfg.get_string("pipeline", "env", o.env);
  o.out_dir = cfg.get_string("pipeline", "out_dir", o.out_dir.string());
  o.n_task_groups = static_cast<int>(cfg.get_int("pipeline", "n_task_groups", o.n_task_groups));
  o.group_size = static_cast<int>(cfg.get_int("pipeline", "group_size", o.group_size));
  o.eval_tasks = static_cast<int>(cfg.get_int("pipeline", "eval_tasks", o.eval_tasks));
  o.threads = static_cast<int>(cfg.get_int("pipeline", "threads", o.threads));
  o.max_steps = static_cast<int>(cfg.get_int("rollout", "max_steps", o.max_steps));
  o.temperature = cfg.get_double("rollout", "temperature", o.temperature);
  o.analysis_runs = static_cast<int>(cfg.get_int("analysis", "runs", o.analysis_runs));
  o.delta = cfg.get_double("analysis", "delta", o.delta);
  o.rho = cfg.get_double("analysis", "rho", o.rho);
  o.min_fraction = cfg.get_double("analysis", "min_fraction", o.min_fraction);

  grpo::TrainerConfig& t = o.trainer;
  t.learning_rate = cfg.get_double("trainer", "learning_rate", t.learning_rate);
  t.max_iterations = static_cast<int>(cfg.get_int("trainer", "max_iterations", t.max_iterations));
  t.clip_epsilon = cfg.get_double("trainer", "clip_epsilon", t.clip_epsilon);
  t.std_epsilon = cfg.get_double("trainer", "std_epsilon", t.std_epsilon);
  t.groups_per_iter =
      static_cast<int>(cfg.get_int("trainer", "groups_per_iter", t.groups_per_iter));
  t.group_size = static_cast<int>(cfg.get_int("trainer", "group_size", t.group_size));
  t.rollout_temperature = cfg.get_double("trainer", "rollout_temperature", t.rollout_temperature);
  t.rank = static_cast<int>(cfg.get_int("trainer", "rank", t.rank));
  t.feature_dim = static_cast<int>(cfg.get_int("trainer", "feature_dim", t.feature_dim));
  t.base_strength = cfg.get_double("trainer", "base_strength", t.base_strength);
  t.max_steps = static_cast<int>(cfg.get_int("trainer", "max_steps", t.max_steps));
  t.threads = static_cast<int>(cfg.get_int("trainer", "threads", t.threads));

  o.gateway_endpoint = cfg.get_string("gateway", "endpoint", o.gateway_endpoint);
  o.gateway_model = cfg.get_string("gateway", "model", o.gateway_model);
  o.mock_seed = cfg.get_u64("gateway", "mock_seed", o.mock_seed);
  o.validate();
  return o;
}

grpo::SoftmaxAdapterPolicy base_policy_for_env(const env::EnvRegistry& reg,
                                               const std::string& env_name,
                                               const grpo::TrainerConfig& trainer,
                                               std::uint64_t seed) {
  auto probe = reg.make(env_name);
  probe->reset(seed);
  std::vector<std::string> vocab = probe->legal_actions();
  if (vocab.empty())
    throw ConfigError("environment '" + env_name +
                      "' has a free-form action space; the built-in base policy needs an "
                      "enumerable action vocabulary");
  return grpo::make_copy_policy(std::move(vocab), trainer.feature_dim, trainer.base_strength);
}

json routing_cards_to_json(const std::vector<routing::RoutingCard>& cards) {
  json arr = json::array();
  for (const auto& c : cards) {
    json item{{"capability_id", c.capability_id},
              {"name", c.name},
              {"description", c.description},
              {"exemplar", env::trajectory_to_json(c.exemplar)}};
    if (c.relevance) item["relevance"] = *c.relevance;
    arr.push_back(std::move(item));
  }
  return json{{"cards", arr}};
}

std::vector<routing::RoutingCard> routing_cards_from_json(const json& j) {
  std::vector<routing::RoutingCard> cards;
  try {
    for (const auto& item : j.at("cards")) {
      routing::RoutingCard c;
      c.capability_id = item.at("capability_id").get<std::string>();
      c.name = item.at("name").get<std::string>();
      c.description = item.at("description").get<std::string>();
      c.exemplar = env::trajectory_from_json(item.at("exemplar"));
      if (item.contains("relevance")) c.relevance = item.at("relevance").get<double>();
      cards.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed routing cards: ") + e.what());
  }
  return cards;
}

PipelineResult run_pipeline(const PipelineOptions& opts, std::ostream& log) {
  opts.validate();
  env::EnvRegistry& reg = env::global_registry();
  synth::ensure_builtin_envs(reg);
  if (!reg.contains(opts.env))
    throw ConfigError("pipeline: environment '" + opts.env + "' is not registered");

  std::filesystem::create_directories(opts.out_dir);
  std::filesystem::create_directories(opts.out_dir / "adapters");
  const auto traj_path = opts.out_dir / "trajectories.jsonl";
  const auto analysis_json_path = opts.out_dir / "analysis.json";
  const auto analysis_csv_path = opts.out_dir / "analysis.csv";
  const auto cards_path = opts.out_dir / "routing_cards.json";
  const auto eval_base_path = opts.out_dir / "eval_base.jsonl";
  const auto eval_routed_path = opts.out_dir / "eval_routed.jsonl";

  const grpo::SoftmaxAdapterPolicy base = base_policy_for_env(reg, opts.env, opts.trainer,
                                                              opts.seed);

  // --- stage: collect ---
  if (std::filesystem::exists(traj_path)) {
    log << "[collect] reusing " << traj_path.string() << "\n";
  } else {
    rollout::RolloutOptions ro;
    for (int g = 0; g < opts.n_task_groups; ++g)
      ro.group_seeds.push_back(opts.seed + static_cast<std::uint64_t>(g));
    ro.group_size = opts.group_size;
    ro.max_steps = opts.max_steps;
    ro.threads = opts.threads;
    ro.global_seed = opts.seed;
    ro.temperature = opts.temperature;
    rollout::CollectResult col = rollout::collect_groups(reg, opts.env, base, ro);
    if (!col.failures.empty())
      stage_fail("collect", "group seed " + std::to_string(col.failures.front().first) +
                                ": " + col.failures.front().second);
    std::vector<env::Trajectory> all;
    for (auto& g : col.groups)
      for (auto& t : g.trajectories) all.push_back(std::move(t));
    env::write_trajectories(traj_path, all);
    log << "[collect] " << all.size() << " trajectories -> " << traj_path.string() << "\n";
  }
  const std::vector<env::Trajectory> dataset = env::read_trajectories(traj_path);

  // --- stage: analyze ---
  std::vector<std::string> deficits;
  std::map<std::string, analysis::CapabilityCard> dictionary;
  if (std::filesystem::exists(analysis_json_path)) {
    log << "[analyze] reusing " << analysis_json_path.string() << "\n";
    const json a = read_json(analysis_json_path);
    try {
      for (const auto& card : a.at("cards")) {
        analysis::CapabilityCard c;
        c.id = card.at("id").get<std::string>();
        c.name = card.at("name").get<std::string>();
        c.description = card.at("description").get<std::string>();
        dictionary[c.id] = std::move(c);
      }
      deficits = a.at("final_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      stage_fail("analyze", std::string("malformed analysis artifact: ") + e.what());
    }
  } else {
    analysis::RuleBasedDiscoverer discoverer;
    analysis::RuleBasedLabeler labeler;
    analysis::AnalysisOptions ao;
    ao.runs = opts.analysis_runs;
    ao.delta = opts.delta;
    ao.rho = opts.rho;
    ao.min_fraction = opts.min_fraction;
    analysis::AnalysisResult res;
    try {
      res = analysis::analyze_dataset(dataset, discoverer, labeler, ao);
    } catch (const std::exception& e) {
      stage_fail("analyze", e.what());
    }
    write_text(analysis_json_path, res.to_json().dump(2) + "\n");
    write_text(analysis_csv_path, res.to_csv());
    for (const auto& c : res.dictionary) dictionary[c.id] = c;
    deficits = res.final_ids;
    log << "[analyze] " << res.dictionary.size() << " candidate capabilities, "
        << deficits.size() << " retained\n";
  }
  std::sort(deficits.begin(), deficits.end());
  for (const auto& id : deficits) log << "[analyze] deficit: " << id << "\n";
  if (deficits.empty()) stage_fail("analyze", "no capability deficits retained");

  // --- stage: train ---
  std::map<std::string, adapters::LoraAdapter> trained;
  std::vector<metrics::TrainingHistory> histories;
  for (const auto& id : deficits) {
    const auto adapter_path = opts.out_dir / "adapters" / (id + ".json");
    const auto history_path = opts.out_dir / "adapters" / (id + ".history.json");
    if (std::filesystem::exists(adapter_path) && std::filesystem::exists(history_path)) {
      log << "[train] reusing " << adapter_path.string() << "\n";
      trained[id] = adapters::load_adapter(adapter_path);
      const json h = read_json(history_path);
      metrics::TrainingHistory th;
      th.label = h.value("label", id);
      th.group_size = h.value("group_size", opts.trainer.group_size);
      th.groups_per_iter = h.value("groups_per_iter", opts.trainer.groups_per_iter);
      th.mean_rewards = h.value("mean_rewards", std::vector<double>{});
      histories.push_back(std::move(th));
      continue;
    }
    const std::string train_env = train_env_for(id);
    if (!reg.contains(train_env))
      stage_fail("train", "training environment '" + train_env + "' is not registered");
    const std::uint64_t train_seed = derive_seed("train", {opts.seed, fnv1a64(id)});
    grpo::TrainOutcome outcome;
    try {
      outcome = grpo::train_capability(reg, train_env, id, opts.trainer, train_seed);
    } catch (const std::exception& e) {
      stage_fail("train", std::string(e.what()));
    }
    if (outcome.aborted) stage_fail("train", id + ": " + outcome.abort_reason);
    auto& adapter = trained[id] = outcome.adapter;
    auto dict = dictionary.find(id);
    adapter.skill_name = dict == dictionary.end() ? id : dict->second.name;
    adapter.skill_description = dict == dictionary.end() ? id : dict->second.description;
    adapters::save_adapter(adapter_path, adapter);
    metrics::TrainingHistory th;
    th.label = id;
    th.group_size = opts.trainer.group_size;
    th.groups_per_iter = opts.trainer.groups_per_iter;
    th.mean_rewards = outcome.history;
    write_text(history_path, json{{"label", th.label},
                                  {"group_size", th.group_size},
                                  {"groups_per_iter", th.groups_per_iter},
                                  {"mean_rewards", th.mean_rewards}}
                                 .dump(2) +
                                 "\n");
    histories.push_back(th);
    const double first = outcome.history.empty() ? 0.0 : outcome.history.front();
    const double last = outcome.history.empty() ? 0.0 : outcome.history.back();
    log << "[train] " << id << " on " << train_env << ": mean reward " << first << " -> "
        << last << " over " << outcome.history.size() << " iterations ("
        << outcome.wasted_iterations << " wasted)\n";
  }

  // --- stage: exemplars / routing cards ---
  std::vector<routing::RoutingCard> cards;
  if (std::filesystem::exists(cards_path)) {
    log << "[cards] reusing " << cards_path.string() << "\n";
    cards = routing_cards_from_json(read_json(cards_path));
  } else {
    for (const auto& id : deficits) {
      const std::string train_env = train_env_for(id);
      const grpo::SoftmaxAdapterPolicy merged = base.with_merged(trained.at(id));
      rollout::RolloutOptions ro;
      for (int g = 0; g < kExemplarGroups; ++g)
        ro.group_seeds.push_back(opts.seed + kExemplarSeedOffset +
                                 static_cast<std::uint64_t>(g));
      ro.group_size = kExemplarGroupSize;
      ro.max_steps = opts.trainer.max_steps;
      ro.threads = 1;
      ro.global_seed = opts.seed;
      ro.temperature = opts.trainer.rollout_temperature;
      rollout::CollectResult probe = rollout::collect_groups(reg, train_env, merged, ro);
      if (!probe.failures.empty())
        stage_fail("cards", id + ": exemplar probe failed: " + probe.failures.front().second);
      auto exemplar = routing::pick_exemplar(probe.groups);
      if (!exemplar)
        stage_fail("cards", id + ": no successful exemplar episode in the probe rollouts");
      routing::RoutingCard card;
      card.capability_id = id;
      auto dict = dictionary.find(id);
      card.name = dict == dictionary.end() ? id : dict->second.name;
      card.description = dict == dictionary.end() ? id : dict->second.description;
      card.exemplar = *exemplar;
      cards.push_back(std::move(card));
    }
    write_text(cards_path, routing_cards_to_json(cards).dump(2) + "\n");
    log << "[cards] " << cards.size() << " routing cards -> " << cards_path.string() << "\n";
  }

  // --- stage: eval ---
  std::unique_ptr<gateway::Gateway> gw;
  if (opts.gateway_endpoint.empty()) {
    gw = std::make_unique<gateway::MockGateway>(opts.mock_seed);
  } else {
    gateway::GatewayConfig gc;
    gc.endpoint = opts.gateway_endpoint;
    gc.model = opts.gateway_model;
    gw = std::make_unique<gateway::HttpGateway>(gc);
  }
  routing::GatewayRouter router(*gw, opts.gateway_model);

  if (std::filesystem::exists(eval_base_path) && std::filesystem::exists(eval_routed_path)) {
    log << "[eval] reusing " << eval_base_path.string() << " and "
        << eval_routed_path.string() << "\n";
  } else {
    const env::EnvSpec& spec = reg.spec(opts.env);
    std::vector<env::Trajectory> base_trajs, routed_trajs;
    for (int i = 0; i < opts.eval_tasks; ++i) {
      const std::uint64_t scenario = opts.seed + kEvalSeedOffset + static_cast<std::uint64_t>(i);
      const std::uint64_t stream = derive_seed("episode", {opts.seed, scenario, 0});
      auto envp = reg.make(opts.env);
      base_trajs.push_back(rollout::run_episode(*envp, spec, base, scenario, stream,
                                                opts.max_steps, opts.temperature));
      try {
        routed_trajs.push_back(routing::run_with_routing(reg, opts.env, cards, router, base,
                                                         trained, scenario, stream,
                                                         opts.max_steps, opts.temperature)
                                   .trajectory);
      } catch (const std::exception& e) {
        stage_fail("eval", "task seed " + std::to_string(scenario) + ": " + e.what());
      }
    }
    env::write_trajectories(eval_base_path, base_trajs);
    env::write_trajectories(eval_routed_path, routed_trajs);
    log << "[eval] " << base_trajs.size() << " base + " << routed_trajs.size()
        << " routed episodes\n";
  }

  PipelineResult result;
  result.deficit_ids = deficits;
  result.out_dir = opts.out_dir;
  result.base_eval = metrics::summarize_eval(env::read_trajectories(eval_base_path));
  result.routed_eval = metrics::summarize_eval(env::read_trajectories(eval_routed_path));
  result.pass_gain = result.routed_eval.pass_rate - result.base_eval.pass_rate;

  write_text(opts.out_dir / "eval_summary.json",
             json{{"base", result.base_eval.to_json()},
                  {"routed", result.routed_eval.to_json()},
                  {"pass_gain", result.pass_gain},
                  {"deficits", result.deficit_ids}}
                     .dump(2) +
                 "\n");

  std::vector<metrics::CapabilityPoint> points;
  points.push_back({"base", 0, result.base_eval.pass_rate});
  points.push_back(
      {"routed", static_cast<int>(result.deficit_ids.size()), result.routed_eval.pass_rate});
  metrics::emit_report(histories, points, opts.out_dir / "report");

  log << "[done] base pass " << metrics::percent_label(result.base_eval.pass_rate)
      << ", routed pass " << metrics::percent_label(result.routed_eval.pass_rate) << " (gain "
      << metrics::percent_label(result.pass_gain) << ")\n";
  return result;
}

}  // namespace caprl::pipeline
