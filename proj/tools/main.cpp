// caprl: single entry point for the capability self-improvement loop.
// Exit codes: 0 success, 1 stage failure, 2 config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "caprl/analysis/analysis.hpp"
#include "caprl/common.hpp"
#include "caprl/config/config.hpp"
#include "caprl/envprompt/env_prompt.hpp"
#include "caprl/gateway/gateway.hpp"
#include "caprl/grpo/grpo.hpp"
#include "caprl/metrics/metrics.hpp"
#include "caprl/pipeline/pipeline.hpp"
#include "caprl/rollout/rollout.hpp"
#include "caprl/rollout/verify.hpp"
#include "caprl/routing/routing.hpp"
#include "caprl/synth/builtin.hpp"

namespace {

using caprl::ConfigError;
using nlohmann::json;
namespace fs = std::filesystem;

// "A..B" inclusive, or a single seed "A".
std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto parse_one = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + s + "' in range '" + text + "'");
    }
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {parse_one(text)};
  const std::uint64_t lo = parse_one(text.substr(0, dots));
  const std::uint64_t hi = parse_one(text.substr(dots + 2));
  if (hi < lo) throw ConfigError("seed range '" + text + "' runs backwards");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  return seeds;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw caprl::ProtocolError("cannot write " + path.string());
  out << text;
}

// "" or "mock" -> deterministic in-process gateway; anything else is an
// HTTP endpoint.
std::unique_ptr<caprl::gateway::Gateway> make_gateway(const std::string& endpoint,
                                                      const std::string& model,
                                                      std::uint64_t mock_seed) {
  if (endpoint.empty() || endpoint == "mock")
    return std::make_unique<caprl::gateway::MockGateway>(mock_seed);
  caprl::gateway::GatewayConfig gc;
  gc.endpoint = endpoint;
  gc.model = model;
  return std::make_unique<caprl::gateway::HttpGateway>(gc);
}

std::map<std::string, caprl::adapters::LoraAdapter> load_adapter_dir(
    const fs::path& dir, const std::vector<caprl::routing::RoutingCard>& cards) {
  std::map<std::string, caprl::adapters::LoraAdapter> out;
  for (const auto& card : cards) {
    const fs::path path = dir / (card.capability_id + ".json");
    if (!fs::exists(path))
      throw ConfigError("no adapter for capability '" + card.capability_id + "' at " +
                        path.string());
    out[card.capability_id] = caprl::adapters::load_adapter(path);
  }
  return out;
}

caprl::pipeline::PipelineOptions options_from_config_path(const std::string& config_path) {
  if (config_path.empty()) return caprl::pipeline::PipelineOptions{};
  return caprl::pipeline::pipeline_options_from_config(
      caprl::config::Config::parse_file(config_path));
}

std::string decision_text(const caprl::routing::RoutingDecision& d) {
  std::ostringstream out;
  out << "chosen: " << d.chosen << " (label " << d.chosen_label << ")\n";
  if (d.fell_back) out << "fallback: " << d.warning << "\n";
  if (d.label_logits.empty()) {
    out << "logits: none (backend exposed no scores)\n";
  } else {
    out << "logits:\n";
    for (const auto& [label, logit] : d.label_logits) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "  %-4s % .6f\n", label.c_str(), logit);
      out << buf;
    }
  }
  out << "prompt digest: " << caprl::hex64(d.prompt_digest) << "\n";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  caprl::env::EnvRegistry& reg = caprl::env::global_registry();
  caprl::synth::ensure_builtin_envs(reg);

  CLI::App app{"capability discovery, adapter training, and routed evaluation"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- rollout ----
  struct {
    std::string env, seeds = "0..19", out;
    int k = 8, max_steps = 50, threads = 1;
    std::uint64_t global_seed = 0;
    double temp = 1.0;
  } ro;
  {
    auto* c = app.add_subcommand("rollout",
                                 "collect grouped rollouts with the built-in base policy");
    c->add_option("--env", ro.env, "environment name")->required();
    c->add_option("--seeds", ro.seeds, "scenario seeds, A..B inclusive or a single seed")
        ->capture_default_str();
    c->add_option("--k", ro.k, "replicates per scenario")->capture_default_str();
    c->add_option("--temp", ro.temp, "sampling temperature")->capture_default_str();
    c->add_option("--out", ro.out, "output trajectory JSONL")->required();
    c->add_option("--max-steps", ro.max_steps, "agent turns before truncation")
        ->capture_default_str();
    c->add_option("--threads", ro.threads, "rollout worker threads")->capture_default_str();
    c->add_option("--global-seed", ro.global_seed, "seed for per-episode policy streams")
        ->capture_default_str();
    c->callback([&] {
      const auto base =
          caprl::pipeline::base_policy_for_env(reg, ro.env, {}, ro.global_seed);
      caprl::rollout::RolloutOptions opts;
      opts.group_seeds = parse_seed_range(ro.seeds);
      opts.group_size = ro.k;
      opts.max_steps = ro.max_steps;
      opts.threads = ro.threads;
      opts.global_seed = ro.global_seed;
      opts.temperature = ro.temp;
      const auto col = caprl::rollout::collect_groups(reg, ro.env, base, opts);
      for (const auto& [seed, reason] : col.failures)
        std::cerr << "group seed " << seed << " failed: " << reason << "\n";
      std::vector<caprl::env::Trajectory> all;
      for (const auto& g : col.groups)
        for (const auto& t : g.trajectories) all.push_back(t);
      caprl::env::write_trajectories(ro.out, all);
      std::cout << "wrote " << all.size() << " trajectories in " << col.groups.size()
                << " groups -> " << ro.out << "\n";
      if (!col.failures.empty()) exit_code = 1;
    });
  }

  // ---- verify-env ----
  struct {
    std::string env;
    std::uint64_t seed = 0;
    int episodes = 100, groups = 20, k = 8, max_steps = 16, threads = 1;
    double temp = 1.0;
  } ve;
  {
    auto* c = app.add_subcommand("verify-env",
                                 "reward-signal health check under the base policy");
    c->add_option("--env", ve.env, "environment name")->required();
    c->add_option("--seed", ve.seed, "base seed")->capture_default_str();
    c->add_option("--episodes", ve.episodes, "single-rollout episodes")->capture_default_str();
    c->add_option("--groups", ve.groups, "grouped-phase scenario count")->capture_default_str();
    c->add_option("--k", ve.k, "replicates per group")->capture_default_str();
    c->add_option("--max-steps", ve.max_steps, "agent turns before truncation")
        ->capture_default_str();
    c->add_option("--threads", ve.threads, "rollout worker threads")->capture_default_str();
    c->add_option("--temp", ve.temp, "sampling temperature")->capture_default_str();
    c->callback([&] {
      const auto base = caprl::pipeline::base_policy_for_env(reg, ve.env, {}, ve.seed);
      caprl::rollout::VerifyOptions opts;
      opts.episodes = ve.episodes;
      opts.n_groups = ve.groups;
      opts.group_size = ve.k;
      opts.max_steps = ve.max_steps;
      opts.threads = ve.threads;
      opts.temperature = ve.temp;
      const auto report = caprl::rollout::verify_environment(reg, ve.env, base, ve.seed, opts);
      std::cout << report.to_text() << report.to_json().dump(2) << "\n";
      if (!report.ok) exit_code = 1;
    });
  }

  // ---- analyze ----
  struct {
    std::string in, out, csv, gateway, model = "local-model";
    int runs = 1;
    double delta = caprl::analysis::kDefaultDelta;
    double rho = caprl::analysis::kDefaultRho;
    double min_fraction = caprl::analysis::kDefaultMinFraction;
    std::uint64_t mock_seed = 0;
  } an;
  {
    auto* c = app.add_subcommand("analyze",
                                 "contrastive capability discovery + labeling over a "
                                 "trajectory set");
    c->add_option("--in", an.in, "trajectory JSONL")->required()->check(CLI::ExistingFile);
    c->add_option("--runs", an.runs, "independent labeling runs")->capture_default_str();
    c->add_option("--delta", an.delta, "minimum contrastive gap")->capture_default_str();
    c->add_option("--rho", an.rho, "minimum failure coverage")->capture_default_str();
    c->add_option("--min-fraction", an.min_fraction,
                  "consistency threshold over labeling runs")
        ->capture_default_str();
    c->add_option("--out", an.out, "analysis artifact JSON")->required();
    c->add_option("--csv", an.csv, "per-card stats CSV (default: --out with .csv)");
    c->add_option("--gateway", an.gateway,
                  "'' or 'mock' for the rule-table labeler/mock, else an HTTP endpoint "
                  "for LLM discovery+labeling");
    c->add_option("--model", an.model, "gateway model name")->capture_default_str();
    c->add_option("--mock-seed", an.mock_seed, "mock gateway seed")->capture_default_str();
    c->callback([&] {
      const auto data = caprl::env::read_trajectories(an.in);
      caprl::analysis::AnalysisOptions opts;
      opts.runs = an.runs;
      opts.delta = an.delta;
      opts.rho = an.rho;
      opts.min_fraction = an.min_fraction;
      caprl::analysis::AnalysisResult res;
      if (an.gateway.empty()) {
        caprl::analysis::RuleBasedDiscoverer discoverer;
        caprl::analysis::RuleBasedLabeler labeler;
        res = caprl::analysis::analyze_dataset(data, discoverer, labeler, opts);
      } else {
        auto gw = make_gateway(an.gateway, an.model, an.mock_seed);
        caprl::analysis::LlmDiscoverer discoverer(*gw, an.model);
        caprl::analysis::LlmLabeler labeler(*gw, an.model);
        res = caprl::analysis::analyze_dataset(data, discoverer, labeler, opts);
      }
      write_text_file(an.out, res.to_json().dump(2) + "\n");
      const fs::path csv = an.csv.empty() ? fs::path(an.out).replace_extension(".csv")
                                          : fs::path(an.csv);
      write_text_file(csv, res.to_csv());
      for (const auto& card : res.dictionary) {
        const auto sel = res.selection_counts.find(card.id);
        const int n = sel == res.selection_counts.end() ? 0 : sel->second;
        const bool kept = std::find(res.final_ids.begin(), res.final_ids.end(), card.id) !=
                          res.final_ids.end();
        std::cout << (kept ? "retained " : "rejected ") << card.id << " (" << n << "/"
                  << opts.runs << " runs)\n";
      }
      std::cout << res.final_ids.size() << " of " << res.dictionary.size()
                << " capabilities retained -> " << an.out << ", " << csv.string() << "\n";
    });
  }

  // ---- train ----
  struct {
    std::string env, capability, config, out, history;
    std::uint64_t seed = 0;
  } tr;
  {
    auto* c = app.add_subcommand("train", "GRPO-train one capability adapter");
    c->add_option("--env", tr.env, "training environment name")->required();
    c->add_option("--capability", tr.capability, "capability id for the adapter")->required();
    c->add_option("--config", tr.config, "INI config; [trainer] section applies")
        ->check(CLI::ExistingFile);
    c->add_option("--seed", tr.seed, "training seed")->capture_default_str();
    c->add_option("--out", tr.out, "adapter JSON path")->required();
    c->add_option("--history", tr.history, "per-iteration mean-reward JSON");
    c->callback([&] {
      const auto opts = options_from_config_path(tr.config);
      const auto outcome =
          caprl::grpo::train_capability(reg, tr.env, tr.capability, opts.trainer, tr.seed);
      if (outcome.aborted)
        throw caprl::ProtocolError("train aborted: " + outcome.abort_reason);
      auto adapter = outcome.adapter;
      if (adapter.skill_name.empty()) adapter.skill_name = tr.capability;
      caprl::adapters::save_adapter(tr.out, adapter);
      if (!tr.history.empty())
        write_text_file(tr.history, json{{"label", tr.capability},
                                         {"group_size", opts.trainer.group_size},
                                         {"groups_per_iter", opts.trainer.groups_per_iter},
                                         {"mean_rewards", outcome.history}}
                                        .dump(2) +
                                        "\n");
      const double first = outcome.history.empty() ? 0.0 : outcome.history.front();
      const double last = outcome.history.empty() ? 0.0 : outcome.history.back();
      std::cout << "trained " << tr.capability << " on " << tr.env << ": mean reward "
                << first << " -> " << last << " over " << outcome.history.size()
                << " iterations (" << outcome.wasted_iterations << " wasted) -> " << tr.out
                << "\n";
    });
  }

  // ---- route ----
  struct {
    std::string task, caps, adapters, gateway, model = "local-model", out;
    std::uint64_t mock_seed = 0;
  } rt;
  {
    auto* c = app.add_subcommand("route", "pick an adapter (or BASE) for one task");
    c->add_option("--task", rt.task, "text file holding the task's first observation")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--caps", rt.caps, "routing cards JSON")->required()->check(
        CLI::ExistingFile);
    c->add_option("--adapters", rt.adapters, "directory of <capability_id>.json adapters")
        ->required()
        ->check(CLI::ExistingDirectory);
    c->add_option("--gateway", rt.gateway, "'' or 'mock' for the mock, else HTTP endpoint");
    c->add_option("--model", rt.model, "gateway model name")->capture_default_str();
    c->add_option("--mock-seed", rt.mock_seed, "mock gateway seed")->capture_default_str();
    c->add_option("--out", rt.out, "also write the decision JSON here");
    c->callback([&] {
      std::string task = read_text_file(rt.task);
      while (!task.empty() && (task.back() == '\n' || task.back() == '\r')) task.pop_back();
      const auto cards = caprl::pipeline::routing_cards_from_json(read_json_file(rt.caps));
      load_adapter_dir(rt.adapters, cards);  // paths must resolve even for BASE
      const auto prompt = caprl::routing::assemble_routing_prompt(task, cards);
      auto gw = make_gateway(rt.gateway, rt.model, rt.mock_seed);
      caprl::routing::GatewayRouter router(*gw, rt.model);
      const auto decision = router.route(prompt);
      std::cout << decision_text(decision) << decision.to_json().dump(2) << "\n";
      if (!rt.out.empty()) write_text_file(rt.out, decision.to_json().dump(2) + "\n");
    });
  }

  // ---- eval ----
  struct {
    std::string env = "skill_mix_game";
    int tasks = 100, max_steps = 8;
    std::uint64_t seed = 0, mock_seed = 0;
    double temp = 1.0;
    bool route = false;
    std::string caps, adapters, gateway, model = "local-model", out, summary;
  } ev;
  {
    auto* c = app.add_subcommand("eval", "run a seeded eval set, optionally routed");
    c->add_option("--env", ev.env, "environment name")->capture_default_str();
    c->add_option("--tasks", ev.tasks, "number of eval scenarios")->capture_default_str();
    c->add_option("--seed", ev.seed, "base seed; scenario i uses seed+i")
        ->capture_default_str();
    c->add_option("--max-steps", ev.max_steps, "agent turns before truncation")
        ->capture_default_str();
    c->add_option("--temp", ev.temp, "sampling temperature")->capture_default_str();
    auto* route_flag =
        c->add_flag("--route", ev.route, "route each task to an adapter before acting");
    auto* caps_opt =
        c->add_option("--caps", ev.caps, "routing cards JSON")->check(CLI::ExistingFile);
    auto* adapters_opt =
        c->add_option("--adapters", ev.adapters, "directory of <capability_id>.json adapters")
            ->check(CLI::ExistingDirectory);
    route_flag->needs(caps_opt)->needs(adapters_opt);
    c->add_option("--gateway", ev.gateway, "'' or 'mock' for the mock, else HTTP endpoint");
    c->add_option("--model", ev.model, "gateway model name")->capture_default_str();
    c->add_option("--mock-seed", ev.mock_seed, "mock gateway seed")->capture_default_str();
    c->add_option("--out", ev.out, "write episode trajectories JSONL here");
    c->add_option("--summary", ev.summary, "write the EvalSummary JSON here");
    c->callback([&] {
      const auto base = caprl::pipeline::base_policy_for_env(reg, ev.env, {}, ev.seed);
      std::vector<caprl::routing::RoutingCard> cards;
      std::map<std::string, caprl::adapters::LoraAdapter> adapters;
      std::unique_ptr<caprl::gateway::Gateway> gw;
      std::unique_ptr<caprl::routing::GatewayRouter> router;
      if (ev.route) {
        cards = caprl::pipeline::routing_cards_from_json(read_json_file(ev.caps));
        adapters = load_adapter_dir(ev.adapters, cards);
        gw = make_gateway(ev.gateway, ev.model, ev.mock_seed);
        router = std::make_unique<caprl::routing::GatewayRouter>(*gw, ev.model);
      }
      const auto& spec = reg.spec(ev.env);
      std::vector<caprl::env::Trajectory> trajs;
      for (int i = 0; i < ev.tasks; ++i) {
        const std::uint64_t scenario = ev.seed + static_cast<std::uint64_t>(i);
        const std::uint64_t stream = caprl::derive_seed("episode", {ev.seed, scenario, 0});
        if (ev.route) {
          trajs.push_back(caprl::routing::run_with_routing(reg, ev.env, cards, *router, base,
                                                           adapters, scenario, stream,
                                                           ev.max_steps, ev.temp)
                              .trajectory);
        } else {
          auto envp = reg.make(ev.env);
          trajs.push_back(caprl::rollout::run_episode(*envp, spec, base, scenario, stream,
                                                      ev.max_steps, ev.temp));
        }
      }
      const auto summary = caprl::metrics::summarize_eval(trajs);
      std::cout << summary.to_text();
      if (!ev.out.empty()) caprl::env::write_trajectories(ev.out, trajs);
      if (!ev.summary.empty())
        write_text_file(ev.summary, summary.to_json().dump(2) + "\n");
    });
  }

  // ---- report ----
  struct {
    std::string in, out;
  } rp;
  {
    auto* c = app.add_subcommand("report",
                                 "render training curves + eval comparison from a pipeline "
                                 "output directory");
    c->add_option("--in", rp.in, "pipeline output directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    c->add_option("--out", rp.out, "directory for the CSVs")->required();
    c->callback([&] {
      std::vector<caprl::metrics::TrainingHistory> histories;
      const fs::path adapter_dir = fs::path(rp.in) / "adapters";
      if (fs::exists(adapter_dir)) {
        std::vector<fs::path> paths;
        for (const auto& entry : fs::directory_iterator(adapter_dir))
          if (entry.path().string().ends_with(".history.json")) paths.push_back(entry.path());
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) {
          const json h = read_json_file(p);
          caprl::metrics::TrainingHistory th;
          th.label = h.value("label", p.stem().stem().string());
          th.group_size = h.value("group_size", 0);
          th.groups_per_iter = h.value("groups_per_iter", 0);
          th.mean_rewards = h.value("mean_rewards", std::vector<double>{});
          histories.push_back(std::move(th));
        }
      }
      std::vector<caprl::metrics::CapabilityPoint> points;
      const fs::path summary_path = fs::path(rp.in) / "eval_summary.json";
      if (fs::exists(summary_path)) {
        const json s = read_json_file(summary_path);
        const int n = static_cast<int>(s.value("deficits", std::vector<std::string>{}).size());
        points.push_back({"base", 0, s.at("base").value("pass_rate", 0.0)});
        points.push_back({"routed", n, s.at("routed").value("pass_rate", 0.0)});
      }
      caprl::metrics::emit_report(histories, points, rp.out);
      std::cout << "wrote rollouts_vs_score.csv (" << histories.size()
                << " curves) and capabilities_vs_score.csv (" << points.size()
                << " points) -> " << rp.out << "\n";
    });
  }

  // ---- pipeline ----
  struct {
    std::string config, out_dir, env;
    std::uint64_t seed = 0;
    int threads = 1;
  } pl;
  {
    auto* c = app.add_subcommand(
        "pipeline", "full loop: collect -> analyze -> train per deficit -> routed eval");
    c->add_option("--config", pl.config, "INI config (sections pipeline/rollout/analysis/"
                                         "trainer/gateway)")
        ->check(CLI::ExistingFile);
    auto* out_opt = c->add_option("--out-dir", pl.out_dir, "override the output directory");
    auto* seed_opt = c->add_option("--seed", pl.seed, "override the global seed");
    auto* env_opt = c->add_option("--env", pl.env, "override the task environment");
    auto* thr_opt = c->add_option("--threads", pl.threads, "override rollout threads");
    c->callback([&] {
      auto opts = options_from_config_path(pl.config);
      if (out_opt->count()) opts.out_dir = pl.out_dir;
      if (seed_opt->count()) opts.seed = pl.seed;
      if (env_opt->count()) opts.env = pl.env;
      if (thr_opt->count()) opts.threads = pl.threads;
      const auto result = caprl::pipeline::run_pipeline(opts, std::cout);
      std::cout << "pipeline complete: " << result.deficit_ids.size()
                << " capability adapters, artifacts under " << result.out_dir.string() << "\n";
    });
  }

  // ---- gen-env-prompt ----
  struct {
    std::string caps, capability, skill, failure, correct, examples, game, vllm, out;
  } gp;
  {
    auto* c = app.add_subcommand("gen-env-prompt",
                                 "render the environment-designer prompt for a capability");
    c->add_option("--caps", gp.caps, "analysis artifact JSON; fills the skill description "
                                     "from a card")
        ->check(CLI::ExistingFile);
    c->add_option("--capability", gp.capability, "capability id to pull from --caps");
    c->add_option("--skill-description", gp.skill, "{SKILL_DESCRIPTION} (overrides --caps)");
    c->add_option("--failure-pattern", gp.failure, "{FAILURE_PATTERN}");
    c->add_option("--correct-behavior", gp.correct, "{CORRECT_BEHAVIOR}");
    c->add_option("--examples", gp.examples,
                  "{TRAJECTORY_EXAMPLES_OR_PATH}: inline text or a path");
    c->add_option("--game-name", gp.game, "{GAME_NAME}");
    c->add_option("--vllm-url", gp.vllm, "{VLLM_URL}");
    c->add_option("--out", gp.out, "output path (stdout when omitted)");
    c->callback([&] {
      caprl::envprompt::EnvPromptInputs in;
      in.skill_description = gp.skill;
      if (in.skill_description.empty() && !gp.caps.empty()) {
        if (gp.capability.empty())
          throw ConfigError("--caps needs --capability to pick a card");
        const json a = read_json_file(gp.caps);
        for (const auto& card : a.value("cards", json::array()))
          if (card.value("id", "") == gp.capability)
            in.skill_description = card.value("description", "");
        if (in.skill_description.empty())
          throw ConfigError("no card with id '" + gp.capability + "' in " + gp.caps);
      }
      in.failure_pattern = gp.failure;
      in.correct_behavior = gp.correct;
      in.trajectory_examples = gp.examples;
      in.game_name = gp.game;
      in.vllm_url = gp.vllm;
      const std::string text = caprl::envprompt::render_env_prompt(in);
      if (gp.out.empty())
        std::cout << text;
      else
        write_text_file(gp.out, text);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
