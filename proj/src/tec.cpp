#include "caprl/synth/tec.hpp"

#include <algorithm>
#include <set>

#include "caprl/common.hpp"
#include "caprl/synth/tools.hpp"

namespace caprl::synth {
namespace {

using nlohmann::json;

const std::vector<std::string> kContactFirst = {"ava",  "liam", "mia",  "noah",
                                                "zoe",  "eli",  "ruth", "omar"};
const std::vector<std::string> kContactLast = {"chen", "ortiz", "patel", "silva",
                                               "kim",  "moss",  "banks", "cole"};

std::string cap(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

struct DeviceWorld {
  json db;
  std::vector<std::string> contact_names;
  std::vector<std::string> contact_phones;
};

DeviceWorld build_device(Rng& rng, bool low_battery, bool wifi, bool cellular) {
  DeviceWorld w;
  std::set<std::string> names;
  std::set<int> phone_tails;
  json contacts = json::object();
  while (w.contact_names.size() < 4) {
    const std::string first = rng.choice(kContactFirst);
    const std::string last = rng.choice(kContactLast);
    const std::string name = cap(first) + " " + cap(last);
    if (!names.insert(name).second) continue;
    int tail = static_cast<int>(rng.uniform_int(10, 99));
    while (!phone_tails.insert(tail).second) tail = static_cast<int>(rng.uniform_int(10, 99));
    const std::string phone = "555-01" + std::to_string(tail);
    contacts[name] = {{"phone", phone}};
    w.contact_names.push_back(name);
    w.contact_phones.push_back(phone);
  }
  w.db = {{"settings", {{"wifi", wifi}, {"cellular", cellular}, {"low_battery", low_battery}}},
          {"contacts", contacts},
          {"reminders", json::array()}};
  return w;
}

}  // namespace

Scenario generate_tec_scenario(std::uint64_t seed) {
  Rng rng(derive_seed("tec", {seed}));
  Scenario s;
  s.seed = seed;
  s.domain = Domain::kDevice;
  s.expects_mutation = false;

  const double roll = rng.uniform();
  if (roll < kTecCommunicateCut) {
    s.skill = Skill::kCommunicate;
  } else if (roll < kTecRecoveryCut) {
    s.skill = Skill::kRecovery;
  } else {
    s.skill = Skill::kCombined;
  }
  s.task_type = skill_name(s.skill);
  const std::string code = hex64(rng.next_u64()).substr(0, 6);

  if (s.skill == Skill::kCommunicate) {
    const bool wifi = rng.uniform() < 0.5;
    const bool cellular = rng.uniform() < 0.5;
    DeviceWorld w = build_device(rng, /*low_battery=*/false, wifi, cellular);
    s.database = w.db;
    if (rng.uniform() < 0.5) {
      const std::size_t c = rng.uniform_index(w.contact_names.size());
      s.initial_message =
          "What is " + w.contact_names[c] + "'s phone number? (req " + code + ")";
      s.expected_tool = ToolInvocation{"search_contacts", {{"name", w.contact_names[c]}}};
      s.communicate_info = {w.contact_phones[c]};
    } else {
      s.initial_message = "Is my wifi on or off right now? (req " + code + ")";
      s.expected_tool = ToolInvocation{"get_wifi_status", json::object()};
      s.communicate_info = {wifi ? "wifi is on" : "wifi is off"};
    }
  } else {
    const bool target_wifi = rng.uniform() < 0.5;
    const bool other_on = rng.uniform() < 0.5;
    const std::string service = target_wifi ? "wifi" : "cellular";
    // The target radio starts off behind an active low-battery blocker.
    DeviceWorld w = build_device(rng, /*low_battery=*/true,
                                 /*wifi=*/target_wifi ? false : other_on,
                                 /*cellular=*/target_wifi ? other_on : false);
    s.database = w.db;
    s.expected_tool = ToolInvocation{"set_" + service + "_status", {{"on", true}}};
    if (s.skill == Skill::kRecovery) {
      s.initial_message = "Please turn on " + service + ". (req " + code + ")";
      s.communicate_info = {service, "now on"};
    } else {
      const std::size_t c = rng.uniform_index(w.contact_names.size());
      s.initial_message = "Turn on " + service + " and tell me " + w.contact_names[c] +
                          "'s phone number. (req " + code + ")";
      s.communicate_info = {w.contact_phones[c], service};
    }
  }

  s.user_system_prompt =
      "You are the owner of a personal device, asking an assistant for help.\n"
      "Your request: " +
      s.initial_message + "\nThe assistant replies once with the outcome.";
  return s;
}

RewardBreakdown evaluate_tec_reward(const std::string& final_response,
                                    const nlohmann::json& final_db, const Scenario& s,
                                    const std::vector<std::string>& called_tools) {
  if (!s.expected_tool) throw ProtocolError("tec scenario has no expected tool");

  double action = 0.0;
  const std::string& tool = s.expected_tool->name;
  if (s.skill == Skill::kCommunicate) {
    action = std::count(called_tools.begin(), called_tools.end(), tool) > 0 ? 1.0 : 0.0;
  } else {
    // set_<service>_status -> settings.<service> must be on.
    const std::string service = tool.substr(4, tool.size() - 4 - 7);
    const auto& settings = final_db.at("settings");
    action = settings.contains(service) && settings[service].is_boolean() &&
                     settings[service].get<bool>()
                 ? 1.0
                 : 0.0;
  }

  std::size_t hits = 0;
  for (const auto& kw : s.communicate_info) {
    if (contains_normalized(final_response, kw)) ++hits;
  }
  const double comm = s.communicate_info.empty()
                          ? 0.0
                          : static_cast<double>(hits) /
                                static_cast<double>(s.communicate_info.size());

  return compose_reward({{"action", action}, {"comm", comm}},
                        {{"action", 0.6}, {"comm", 0.4}}, /*alpha=*/0.0);
}

void TecEnv::reset(std::uint64_t seed) {
  clear_state();
  scenario_ = generate_tec_scenario(seed);
  db_ = scenario_.database;
  called_tools_.clear();
  pending_obs_ = scenario_.initial_message;
}

std::string TecEnv::observe(int player) const {
  if (player != 0) throw ProtocolError("tec_game has a single agent player");
  return pending_obs_;
}

void TecEnv::step(const std::optional<std::string>& action) {
  require_active();
  if (!action) {
    finish_invalid(0);
    return;
  }
  env::AgentAction a = env::parse_action(*action);
  if (a.kind == env::AgentAction::Kind::kToolCall) {
    ToolResult res = execute_tool(a.name, a.args, db_);
    if (res.ok) called_tools_.push_back(a.name);
    pending_obs_ = res.text;
    return;
  }
  finish(evaluate_tec_reward(a.text, db_, scenario_, called_tools_).total);
}

std::map<std::string, std::string> TecEnv::episode_tags() const {
  return {{"domain", domain_name(scenario_.domain)}, {"skill", scenario_.task_type}};
}

env::EnvSpec tec_spec() {
  env::EnvSpec spec;
  spec.name = "tec_game";
  spec.max_gen_tokens = 2048;
  spec.action_extractor_id = "tool_call_v1";
  spec.success_threshold = 0.99;
  spec.system_prompt =
      "You are a personal device assistant working through tools.\n"
      "Invoke one tool per turn as tool_name({\"arg\": \"value\"}); the tool output arrives "
      "as the next observation.\n"
      "If a tool is blocked by a device policy, issue tool calls that clear the blocker, then "
      "retry the original tool.\n"
      "When the request is handled, send the user one message with the outcome; that message "
      "ends the episode.";
  return spec;
}

}  // namespace caprl::synth
