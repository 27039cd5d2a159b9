// Python surface: thin JSON-shaped wrappers over the core operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "caprl/analysis/analysis.hpp"
#include "caprl/common.hpp"
#include "caprl/envprompt/env_prompt.hpp"
#include "caprl/grpo/grpo.hpp"
#include "caprl/metrics/metrics.hpp"
#include "caprl/pipeline/pipeline.hpp"
#include "caprl/rollout/rollout.hpp"
#include "caprl/rollout/verify.hpp"
#include "caprl/synth/builtin.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

caprl::env::EnvRegistry& registry() {
  auto& reg = caprl::env::global_registry();
  caprl::synth::ensure_builtin_envs(reg);
  return reg;
}

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<json> trajectories_to_json(const std::vector<caprl::env::Trajectory>& trajs) {
  std::vector<json> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) out.push_back(caprl::env::trajectory_to_json(t));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "capability discovery, adapter training, and routed evaluation";

  py::register_exception<caprl::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<caprl::ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);

  m.def("envs", [] { return registry().names(); }, "registered environment names");

  m.def(
      "rollout",
      [](const std::string& env, int n_groups, int group_size, std::uint64_t seed,
         int max_steps, double temperature, int threads) {
        auto& reg = registry();
        const auto base = caprl::pipeline::base_policy_for_env(reg, env, {}, seed);
        caprl::rollout::RolloutOptions opts;
        for (int g = 0; g < n_groups; ++g)
          opts.group_seeds.push_back(seed + static_cast<std::uint64_t>(g));
        opts.group_size = group_size;
        opts.max_steps = max_steps;
        opts.threads = threads;
        opts.global_seed = seed;
        opts.temperature = temperature;
        const auto col = caprl::rollout::collect_groups(reg, env, base, opts);
        json groups = json::array();
        for (const auto& g : col.groups)
          groups.push_back(json{{"group_seed", g.group_seed},
                                {"rewards", g.rewards},
                                {"trajectories", trajectories_to_json(g.trajectories)}});
        return to_py(json{{"groups", groups}, {"failures", col.failures.size()}});
      },
      py::arg("env"), py::arg("n_groups") = 4, py::arg("group_size") = 8,
      py::arg("seed") = 0, py::arg("max_steps") = 8, py::arg("temperature") = 1.0,
      py::arg("threads") = 1, "collect grouped rollouts with the built-in base policy");

  m.def(
      "verify_env",
      [](const std::string& env, std::uint64_t seed, int episodes, int n_groups,
         int group_size) {
        auto& reg = registry();
        const auto base = caprl::pipeline::base_policy_for_env(reg, env, {}, seed);
        caprl::rollout::VerifyOptions opts;
        opts.episodes = episodes;
        opts.n_groups = n_groups;
        opts.group_size = group_size;
        return to_py(caprl::rollout::verify_environment(reg, env, base, seed, opts).to_json());
      },
      py::arg("env"), py::arg("seed") = 0, py::arg("episodes") = 100,
      py::arg("n_groups") = 20, py::arg("group_size") = 8,
      "reward-signal health check under the base policy");

  m.def(
      "analyze",
      [](const std::string& trajectories_jsonl, int runs, double delta, double rho,
         double min_fraction) {
        const auto data = caprl::env::read_trajectories(trajectories_jsonl);
        caprl::analysis::RuleBasedDiscoverer discoverer;
        caprl::analysis::RuleBasedLabeler labeler;
        caprl::analysis::AnalysisOptions opts;
        opts.runs = runs;
        opts.delta = delta;
        opts.rho = rho;
        opts.min_fraction = min_fraction;
        return to_py(caprl::analysis::analyze_dataset(data, discoverer, labeler, opts).to_json());
      },
      py::arg("trajectories_jsonl"), py::arg("runs") = 1,
      py::arg("delta") = caprl::analysis::kDefaultDelta,
      py::arg("rho") = caprl::analysis::kDefaultRho,
      py::arg("min_fraction") = caprl::analysis::kDefaultMinFraction,
      "contrastive capability analysis of a trajectory file (rule-table labeler)");

  m.def(
      "train",
      [](const std::string& env, const std::string& capability, std::uint64_t seed,
         int max_iterations, double learning_rate) {
        caprl::grpo::TrainerConfig cfg;
        cfg.max_iterations = max_iterations;
        cfg.learning_rate = learning_rate;
        const auto outcome =
            caprl::grpo::train_capability(registry(), env, capability, cfg, seed);
        return to_py(json{{"capability_id", outcome.adapter.capability_id},
                          {"history", outcome.history},
                          {"wasted_iterations", outcome.wasted_iterations},
                          {"aborted", outcome.aborted},
                          {"abort_reason", outcome.abort_reason}});
      },
      py::arg("env"), py::arg("capability"), py::arg("seed") = 0,
      py::arg("max_iterations") = 5, py::arg("learning_rate") = 1e-5,
      "GRPO-train one capability adapter; returns the reward history");

  m.def(
      "run_pipeline",
      [](const std::string& out_dir, std::uint64_t seed, const std::string& env,
         int eval_tasks, int threads) {
        caprl::pipeline::PipelineOptions opts;
        opts.out_dir = out_dir;
        opts.seed = seed;
        opts.env = env;
        opts.eval_tasks = eval_tasks;
        opts.threads = threads;
        std::ostringstream log;
        const auto result = caprl::pipeline::run_pipeline(opts, log);
        return to_py(json{{"deficits", result.deficit_ids},
                          {"base_pass_rate", result.base_eval.pass_rate},
                          {"routed_pass_rate", result.routed_eval.pass_rate},
                          {"pass_gain", result.pass_gain},
                          {"out_dir", result.out_dir.string()},
                          {"log", log.str()}});
      },
      py::arg("out_dir"), py::arg("seed") = 0, py::arg("env") = "skill_mix_game",
      py::arg("eval_tasks") = 100, py::arg("threads") = 1,
      "full loop: collect -> analyze -> train per deficit -> routed eval");

  m.def(
      "pass_rate",
      [](const std::vector<int>& solved, const std::vector<int>& totals) {
        const auto rates = caprl::metrics::pass_rate(solved, totals);
        json per = json::array();
        for (const auto& d : rates.per_domain)
          per.push_back(json{{"domain", d.domain},
                             {"solved", d.solved},
                             {"total", d.total},
                             {"rate", d.rate}});
        return to_py(json{{"per_domain", per},
                          {"solved", rates.solved},
                          {"total", rates.total},
                          {"overall", rates.overall},
                          {"label", caprl::metrics::percent_label(rates.overall)}});
      },
      py::arg("solved"), py::arg("totals"), "exact micro pass rate with % label");

  m.def("percent_label", &caprl::metrics::percent_label, py::arg("rate"));

  m.def(
      "render_env_prompt",
      [](const std::string& skill_description, const std::string& failure_pattern,
         const std::string& correct_behavior, const std::string& trajectory_examples,
         const std::string& game_name, const std::string& vllm_url) {
        caprl::envprompt::EnvPromptInputs in;
        in.skill_description = skill_description;
        in.failure_pattern = failure_pattern;
        in.correct_behavior = correct_behavior;
        in.trajectory_examples = trajectory_examples;
        in.game_name = game_name;
        in.vllm_url = vllm_url;
        return caprl::envprompt::render_env_prompt(in);
      },
      py::arg("skill_description"), py::arg("failure_pattern"), py::arg("correct_behavior"),
      py::arg("trajectory_examples"), py::arg("game_name"), py::arg("vllm_url"),
      "render the environment-designer prompt");

  m.def("derive_seed",
        [](const std::string& tag, const std::vector<std::uint64_t>& parts) {
          return caprl::derive_seed(tag, parts);
        },
        py::arg("tag"), py::arg("parts"), "stable sub-stream seed derivation");
}
