#include "caprl/synth/sdr.hpp"

#include <algorithm>
#include <set>

#include "caprl/common.hpp"
#include "caprl/synth/tools.hpp"

namespace caprl::synth {
namespace {

using nlohmann::json;

const std::vector<std::string> kFirst = {"mia",  "liam", "ava",  "noah", "emma", "kai",
                                         "zoe",  "eli",  "isla", "finn", "ruth", "omar"};
const std::vector<std::string> kLast = {"li",    "ortiz", "chen", "patel", "silva", "novak",
                                        "reyes", "kim",   "moss", "banks", "abe",   "cole"};
const std::vector<std::string> kAirports = {"ATL", "BOS", "DEN", "DFW", "JFK", "LAX",
                                            "MIA", "ORD", "SEA", "SFO", "PHX", "MSP"};
const std::vector<std::string> kCabins = {"basic_economy", "economy", "business"};
const std::vector<std::string> kProductNames = {"desk lamp",  "water bottle", "backpack",
                                                "sunglasses", "keyboard",     "notebook",
                                                "headphones", "sneakers"};
const std::vector<std::string> kColors = {"black", "white", "blue", "red", "green", "silver"};
const std::vector<std::string> kSizes = {"small", "medium", "large"};
const std::vector<std::string> kStreets = {"maple", "cedar", "oak", "pine", "birch", "elm"};
const std::vector<std::string> kTowns = {"springfield", "riverton", "fairview", "brookside"};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// k distinct values from [0, n) in draw order.
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

std::vector<std::string> distinct_ids(Rng& rng, const std::string& prefix, std::size_t count,
                                      int lo, int hi) {
  std::set<int> used;
  std::vector<std::string> out;
  while (out.size() < count) {
    int n = static_cast<int>(rng.uniform_int(lo, hi));
    if (used.insert(n).second) out.push_back(prefix + std::to_string(n));
  }
  return out;
}

std::string ref_code(Rng& rng) { return hex64(rng.next_u64()).substr(0, 6); }

std::string persona_prompt(const Scenario& s, const std::string& display) {
  std::string p = "You are role-playing " + display +
                  ", a customer chatting with a support agent.\n"
                  "Your request: " +
                  s.initial_message +
                  "\nStay in character, answer only what the agent asks, and never operate any "
                  "tools yourself.\n";
  if (!s.reveal_script.empty()) {
    p += "If the agent asks for more detail, reveal it using these lines, in order:\n";
    for (const auto& line : s.reveal_script) p += "- " + line + "\n";
  }
  p += "When the agent has completed the request and told you everything you asked for, reply "
       "with exactly " +
       std::string(kStopToken) + ".";
  return p;
}

struct Person {
  std::string uid;
  std::string display;
};

Person make_person(Rng& rng) {
  const std::string first = rng.choice(kFirst);
  const std::string last = rng.choice(kLast);
  Person p;
  p.uid = first + "_" + last + "_" + std::to_string(rng.uniform_int(1000, 9999));
  p.display = capitalize(first) + " " + capitalize(last);
  return p;
}

// --- airline world -----------------------------------------------------------

struct AirlineWorld {
  json db;
  Person who;
  std::vector<std::string> fnums;  // 6 flights; route of fnums[i] is i % 3
  std::vector<std::pair<std::string, std::string>> routes;  // 3 distinct city pairs
  std::map<std::string, int> eco_price;
  std::vector<std::string> rids;      // 3 reservations, one per route
  std::vector<std::size_t> rfidx;     // flight index per reservation
};

AirlineWorld build_airline(Rng& rng) {
  AirlineWorld w;
  auto cities = sample_distinct(rng, kAirports.size(), 6);
  for (int r = 0; r < 3; ++r) {
    w.routes.emplace_back(kAirports[cities[2 * r]], kAirports[cities[2 * r + 1]]);
  }
  w.fnums = distinct_ids(rng, "HAT", 6, 100, 899);
  auto eco_ks = sample_distinct(rng, 60, 6);

  json flights = json::object();
  for (std::size_t i = 0; i < 6; ++i) {
    const int eco = 80 + 5 * static_cast<int>(eco_ks[i]);
    const int basic = eco - (20 + 5 * static_cast<int>(rng.uniform_index(5)));
    const int bus = eco + 120 + 10 * static_cast<int>(rng.uniform_index(21));
    w.eco_price[w.fnums[i]] = eco;
    const auto& [o, d] = w.routes[i % 3];
    flights[w.fnums[i]] = {
        {"origin", o},
        {"destination", d},
        {"prices", {{"basic_economy", basic}, {"economy", eco}, {"business", bus}}},
        {"seats",
         {{"basic_economy", rng.uniform_int(0, 12)},
          {"economy", rng.uniform_int(0, 12)},
          {"business", rng.uniform_int(0, 12)}}},
    };
  }

  w.who = make_person(rng);
  w.rids = distinct_ids(rng, "RSV", 3, 100, 999);
  json reservations = json::object();
  for (int r = 0; r < 3; ++r) {
    w.rfidx.push_back(static_cast<std::size_t>(r + 3 * static_cast<int>(rng.uniform_index(2))));
    reservations[w.rids[r]] = {{"flight", w.fnums[w.rfidx[r]]},
                               {"cabin", rng.choice(kCabins)},
                               {"status", "confirmed"}};
  }
  w.db = {{"flights", flights},
          {"users",
           {{w.who.uid,
             {{"name", w.who.display},
              {"payment_methods",
               json::array({"credit_card_" + std::to_string(rng.uniform_int(10, 99))})},
              {"reservations", reservations}}}}}};
  return w;
}

void fill_airline(Scenario& s, Rng& rng) {
  AirlineWorld w = build_airline(rng);
  s.database = w.db;
  const std::string code = ref_code(rng);
  json& gold_res_holder = s.database["users"][w.who.uid]["reservations"];

  if (s.task_type == "conditional_fallback") {
    const std::size_t g = rng.uniform_index(3);
    const std::string rid = w.rids[g];
    const std::string fnum = w.fnums[w.rfidx[g]];
    const int price = w.eco_price.at(fnum);
    // Gold reservation must not already be in economy, or the fallback
    // branch would be a no-op mutation.
    gold_res_holder[rid]["cabin"] = rng.uniform() < 0.5 ? "basic_economy" : "business";
    const bool above = rng.uniform() < 0.5;
    const int offset = 5 + 5 * static_cast<int>(rng.uniform_index(6));
    const int threshold = above ? price - offset : price + offset;
    if (above) {
      s.expected_tool = ToolInvocation{"cancel_reservation", {{"reservation_id", rid}}};
    } else {
      s.expected_tool = ToolInvocation{"update_reservation_cabin",
                                       {{"reservation_id", rid}, {"cabin", "economy"}}};
    }
    s.expects_mutation = true;
    s.communicate_info = {"$" + std::to_string(price)};
    s.initial_message = "Hi, I'm " + w.who.display + " (user id " + w.who.uid +
                        "). About reservation " + rid +
                        ": if the economy fare on its flight is strictly above $" +
                        std::to_string(threshold) +
                        ", cancel the reservation; otherwise move it to economy. Either way, "
                        "tell me the economy fare. (ref " +
                        code + ")";
    s.reveal_script = {"Whatever the fare turns out to be, just follow the rule I gave you.",
                       "Are you done? I still need the economy fare."};
  } else if (s.task_type == "cross_entity_match") {
    const std::size_t g = rng.uniform_index(3);
    const std::string rid = w.rids[g];
    const auto& [o, d] = w.routes[w.rfidx[g] % 3];
    s.expected_tool = ToolInvocation{"cancel_reservation", {{"reservation_id", rid}}};
    s.expects_mutation = true;
    s.communicate_info = {rid};
    s.initial_message = "Hello, this is " + w.who.display + " (user id " + w.who.uid +
                        "). Please cancel my reservation on the " + o + " to " + d +
                        " flight; I don't have the booking code on hand. Confirm which "
                        "reservation id you cancel. (ref " +
                        code + ")";
    s.reveal_script = {"I only remember the route, not the booking code.",
                       "Did you find it? Which reservation id did you cancel?"};
  } else {  // progressive_disclosure
    const std::size_t r = rng.uniform_index(3);
    const std::string fa = w.fnums[r];
    const std::string fb = w.fnums[r + 3];
    const std::string best = w.eco_price.at(fa) < w.eco_price.at(fb) ? fa : fb;
    const auto& [o, d] = w.routes[r];
    s.expected_answer = best;
    s.expects_mutation = false;
    s.communicate_info = {best, "$" + std::to_string(w.eco_price.at(best))};
    s.initial_message = "Hi, I'm " + w.who.display + ". I need help choosing a flight to " + d +
                        ". (ref " + code + ")";
    s.reveal_script = {"I'll be leaving from " + o + ".",
                       "Economy, and I want the cheapest option. Which flight number is it and "
                       "what is the fare?"};
  }
  s.user_system_prompt = persona_prompt(s, w.who.display);
}

// --- retail world ------------------------------------------------------------

struct RetailWorld {
  json db;
  Person who;
  std::vector<std::string> pids;  // 4 products; pids[0] has a same-color pair
  std::map<std::string, std::string> product_name;
  std::vector<std::string> items;  // 12 variants, items[0..2] belong to pids[0]
  std::map<std::string, int> item_price;
  std::map<std::string, std::pair<std::string, std::string>> item_attrs;  // color, size
  std::map<std::string, std::string> item_pid;
  std::vector<std::string> oids;  // 3 orders
  std::vector<std::vector<std::string>> order_items;
  std::string pair_color;  // shared color of items[0] and items[1]
};

RetailWorld build_retail(Rng& rng) {
  RetailWorld w;
  auto name_idx = sample_distinct(rng, kProductNames.size(), 4);
  w.pids = distinct_ids(rng, "PRD", 4, 100, 999);
  for (std::size_t i = 0; i < 4; ++i) w.product_name[w.pids[i]] = kProductNames[name_idx[i]];

  // Variant attribute combos are globally distinct so attribute lookups have
  // a unique answer; the first product gets two variants sharing a color.
  std::set<std::pair<std::string, std::string>> used;
  std::vector<std::pair<std::string, std::string>> combos;
  w.pair_color = rng.choice(kColors);
  auto sizes = sample_distinct(rng, kSizes.size(), 2);
  combos.emplace_back(w.pair_color, kSizes[sizes[0]]);
  combos.emplace_back(w.pair_color, kSizes[sizes[1]]);
  used.insert(combos[0]);
  used.insert(combos[1]);
  while (combos.size() < 12) {
    std::pair<std::string, std::string> c{rng.choice(kColors), rng.choice(kSizes)};
    if (used.insert(c).second) combos.push_back(c);
  }

  w.items = distinct_ids(rng, "ITM", 12, 1000, 9999);
  auto price_ks = sample_distinct(rng, 80, 12);
  json products = json::object();
  for (std::size_t p = 0; p < 4; ++p) {
    json variants = json::object();
    for (std::size_t v = 0; v < 3; ++v) {
      const std::size_t i = 3 * p + v;
      const int price = 8 + 4 * static_cast<int>(price_ks[i]);
      w.item_price[w.items[i]] = price;
      w.item_attrs[w.items[i]] = combos[i];
      w.item_pid[w.items[i]] = w.pids[p];
      variants[w.items[i]] = {{"color", combos[i].first},
                              {"size", combos[i].second},
                              {"price", price},
                              {"stock", rng.uniform_int(0, 20)}};
    }
    products[w.pids[p]] = {{"name", w.product_name[w.pids[p]]}, {"variants", variants}};
  }

  w.who = make_person(rng);
  w.oids = distinct_ids(rng, "ORD", 3, 1000, 9999);
  auto owned = sample_distinct(rng, 12, 5);
  w.order_items = {{w.items[owned[0]], w.items[owned[1]]},
                   {w.items[owned[2]], w.items[owned[3]]},
                   {w.items[owned[4]]}};
  json orders = json::object();
  for (std::size_t o = 0; o < 3; ++o) {
    const std::string house = std::to_string(rng.uniform_int(10, 999));
    const std::string street = capitalize(rng.choice(kStreets));
    const std::string town = capitalize(rng.choice(kTowns));
    const std::string addr = house + " " + street + " St, " + town;
    orders[w.oids[o]] = {{"items", w.order_items[o]},
                         {"status", "delivered"},
                         {"address", addr},
                         {"tracking", "TRK" + std::to_string(rng.uniform_int(1000, 9999))},
                         {"returned", json::array()}};
  }
  w.db = {{"products", products},
          {"users",
           {{w.who.uid, {{"name", w.who.display}, {"orders", orders}}}}}};
  return w;
}

void fill_retail(Scenario& s, Rng& rng) {
  RetailWorld w = build_retail(rng);
  s.database = w.db;
  const std::string code = ref_code(rng);

  if (s.task_type == "conditional_fallback") {
    const std::size_t g = rng.uniform_index(3);
    const std::string oid = w.oids[g];
    const std::string item = w.order_items[g][rng.uniform_index(w.order_items[g].size())];
    const int price = w.item_price.at(item);
    const bool above = rng.uniform() < 0.5;
    const int offset = 3 + static_cast<int>(rng.uniform_index(12));
    const int threshold = above ? price - offset : price + offset;
    if (above) {
      s.expected_tool = ToolInvocation{"cancel_order", {{"order_id", oid}}};
    } else {
      s.expected_tool =
          ToolInvocation{"return_order_item", {{"order_id", oid}, {"item_id", item}}};
    }
    s.expects_mutation = true;
    s.communicate_info = {"$" + std::to_string(price)};
    s.initial_message = "Hi, " + w.who.display + " here (user id " + w.who.uid +
                        "). About order " + oid + ": if item " + item +
                        " cost strictly more than $" + std::to_string(threshold) +
                        ", cancel the whole order; otherwise just return that item. Either way, "
                        "tell me the item's price. (ref " +
                        code + ")";
    s.reveal_script = {"The price rule covers both cases, so please just check it.",
                       "Done yet? I still need the item's price."};
  } else if (s.task_type == "cross_entity_match") {
    const std::size_t g = rng.uniform_index(3);
    const std::string oid = w.oids[g];
    const std::string item = w.order_items[g][rng.uniform_index(w.order_items[g].size())];
    const auto& [color, size] = w.item_attrs.at(item);
    s.expected_tool = ToolInvocation{"return_order_item", {{"order_id", oid}, {"item_id", item}}};
    s.expects_mutation = true;
    s.communicate_info = {oid};
    s.initial_message = "Hello, I'm " + w.who.display + " (user id " + w.who.uid +
                        "). I'd like to return the " + color + " " + size + " " +
                        w.product_name.at(w.item_pid.at(item)) +
                        " I bought, but I can't find the order number. Process the return and "
                        "tell me which order it was. (ref " +
                        code + ")";
    s.reveal_script = {"It should be in one of my recent orders.",
                       "Did you find it? Which order id was it?"};
  } else {  // progressive_disclosure
    const std::string ia = w.items[0];
    const std::string ib = w.items[1];
    const std::string best = w.item_price.at(ia) < w.item_price.at(ib) ? ia : ib;
    s.expected_answer = best;
    s.expects_mutation = false;
    s.communicate_info = {best, "$" + std::to_string(w.item_price.at(best))};
    s.initial_message = "Hi! I'm shopping for a " + w.product_name.at(w.pids[0]) +
                        ". Can you help me pick one? (ref " + code + ")";
    s.reveal_script = {"I'd like it in " + w.pair_color + ".",
                       "Whichever is cheapest in that color. What's the item id and the price?"};
  }
  s.user_system_prompt = persona_prompt(s, w.who.display);
}

}  // namespace

Scenario generate_sdr_scenario(std::uint64_t seed, const SdrOptions& opts) {
  if (opts.domains.empty()) throw ConfigError("sdr: no domains configured");
  if (opts.task_types.empty()) throw ConfigError("sdr: no task types configured");
  for (const auto& t : opts.task_types) {
    if (t != "conditional_fallback" && t != "cross_entity_match" &&
        t != "progressive_disclosure") {
      throw ConfigError("sdr: unknown task type '" + t + "'");
    }
  }
  Rng rng(derive_seed("sdr", {seed}));
  Scenario s;
  s.seed = seed;
  s.domain = opts.domains[rng.uniform_index(opts.domains.size())];
  s.task_type = opts.task_types[rng.uniform_index(opts.task_types.size())];
  s.skill = Skill::kNone;
  switch (s.domain) {
    case Domain::kAirline:
      fill_airline(s, rng);
      break;
    case Domain::kRetail:
      fill_retail(s, rng);
      break;
    default:
      throw ConfigError("sdr: scenarios support airline and retail domains only");
  }
  return s;
}

nlohmann::json replay_gold_action(const Scenario& s) {
  nlohmann::json db = s.database;
  if (!s.expected_tool) return db;
  ToolResult res = execute_tool(s.expected_tool->name, s.expected_tool->args, db);
  if (!res.ok) {
    throw ProtocolError("gold action " + s.expected_tool->name + " failed: " + res.text);
  }
  return db;
}

RewardBreakdown evaluate_sdr_reward(const std::vector<std::string>& agent_messages,
                                    const Scenario& s, const nlohmann::json& final_db) {
  const std::string said = join(agent_messages, "\n");
  bool comm = true;
  for (const auto& kw : s.communicate_info) comm = comm && contains_normalized(said, kw);

  RewardBreakdown rb;
  rb.alpha = 1.0;
  rb.components["comm"] = comm ? 1.0 : 0.0;
  if (s.expects_mutation) {
    const bool db_match = db_hash(final_db) == db_hash(replay_gold_action(s));
    rb.components["db_match"] = db_match ? 1.0 : 0.0;
    const double tier = db_match && comm ? 1.0 : db_match ? 0.3 : 0.0;
    rb.multiplicative = tier;
    rb.additive = 0.5 * rb.components["db_match"] + 0.5 * rb.components["comm"];
    rb.total = tier;
  } else {
    const double v = comm ? 1.0 : 0.0;
    rb.multiplicative = v;
    rb.additive = v;
    rb.total = v;
  }
  rb.validate();
  return rb;
}

// --- user simulators ---------------------------------------------------------

ScriptedUserSim::ScriptedUserSim(Scenario scenario) : scenario_(std::move(scenario)) {}

std::string ScriptedUserSim::respond(const std::vector<std::string>& agent_messages) {
  const std::string said = join(agent_messages, "\n");
  bool all = !scenario_.communicate_info.empty();
  for (const auto& kw : scenario_.communicate_info) {
    all = all && contains_normalized(said, kw);
  }
  if (all) return "Thanks, that is everything I needed. " + std::string(kStopToken);
  if (cursor_ < scenario_.reveal_script.size()) return scenario_.reveal_script[cursor_++];
  return "I have to go now. " + std::string(kStopToken);
}

UserSimFactory scripted_user_factory() {
  return [](const Scenario& s) { return std::make_unique<ScriptedUserSim>(s); };
}

LlmUserSim::LlmUserSim(gateway::Gateway* gw, std::string model, Scenario scenario, int max_turns)
    : gw_(gw), model_(std::move(model)), scenario_(std::move(scenario)), max_turns_(max_turns) {}

std::string LlmUserSim::respond(const std::vector<std::string>& agent_messages) {
  ++turns_;
  gateway::ChatRequest req;
  req.model = model_;
  req.temperature = 0.7;
  req.max_tokens = 256;
  req.messages.push_back({"system", scenario_.user_system_prompt});
  // From the simulator's viewpoint the agent is the interlocutor: agent
  // messages arrive as "user", the simulator's own replies as "assistant".
  for (std::size_t i = 0; i < agent_messages.size(); ++i) {
    req.messages.push_back({"user", agent_messages[i]});
    if (i < replies_.size()) req.messages.push_back({"assistant", replies_[i]});
  }
  std::string reply = gw_->complete(req);
  if (turns_ >= max_turns_ && reply.find(kStopToken) == std::string::npos) {
    reply += " " + std::string(kStopToken);
  }
  replies_.push_back(reply);
  return reply;
}

UserSimFactory llm_user_factory(gateway::Gateway* gw, std::string model) {
  return [gw, model](const Scenario& s) {
    return std::make_unique<LlmUserSim>(gw, model, s);
  };
}

// --- environment ---------------------------------------------------------

SdrEnv::SdrEnv(UserSimFactory user_factory, SdrOptions opts)
    : user_factory_(std::move(user_factory)), opts_(std::move(opts)) {}

void SdrEnv::reset(std::uint64_t seed) {
  clear_state();
  scenario_ = generate_sdr_scenario(seed, opts_);
  db_ = scenario_.database;
  user_ = user_factory_(scenario_);
  agent_messages_.clear();
  pending_obs_ = scenario_.initial_message;
}

std::string SdrEnv::observe(int player) const {
  if (player != 0) throw ProtocolError("structured_data_game has a single agent player");
  return pending_obs_;
}

void SdrEnv::step(const std::optional<std::string>& action) {
  require_active();
  if (!action) {
    finish_invalid(0);
    return;
  }
  env::AgentAction a = env::parse_action(*action);
  if (a.kind == env::AgentAction::Kind::kToolCall) {
    pending_obs_ = execute_tool(a.name, a.args, db_).text;
    return;
  }
  agent_messages_.push_back(a.text);
  const std::string reply = user_->respond(agent_messages_);
  pending_obs_ = reply;
  if (reply.find(kStopToken) != std::string::npos) {
    finish(evaluate_sdr_reward(agent_messages_, scenario_, db_).total);
  }
}

std::map<std::string, std::string> SdrEnv::episode_tags() const {
  return {{"domain", domain_name(scenario_.domain)},
          {"task_type", scenario_.task_type},
          {"expects_mutation", scenario_.expects_mutation ? "true" : "false"}};
}

env::EnvSpec sdr_spec() {
  env::EnvSpec spec;
  spec.name = "structured_data_game";
  spec.max_gen_tokens = 2048;
  spec.action_extractor_id = "tool_call_v1";
  spec.success_threshold = 1.0;
  spec.system_prompt =
      "You are a support agent resolving a customer request over a tool interface.\n"
      "Invoke exactly one tool per turn as tool_name({\"arg\": \"value\"}); the next "
      "observation is the tool's output.\n"
      "Any turn that is not a tool call is sent to the customer as a message.\n"
      "Update the records the customer asks about, then report the requested details back "
      "to them.";
  return spec;
}

}  // namespace caprl::synth
