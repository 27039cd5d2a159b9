#include <doctest.h>

#include <cmath>

#include "caprl/common.hpp"
#include "caprl/synth/scenario.hpp"

using namespace caprl;
using synth::RewardBreakdown;
using synth::compose_reward;

TEST_CASE("compose_reward matches a hand-evaluated oracle") {
  const std::map<std::string, double> comps{{"action", 0.8}, {"comm", 0.5}};
  const std::map<std::string, double> weights{{"action", 0.6}, {"comm", 0.4}};

  // alpha = 1: pure product.
  RewardBreakdown mult = compose_reward(comps, weights, 1.0);
  CHECK(mult.multiplicative == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(mult.total == doctest::Approx(0.4).epsilon(1e-12));
  mult.validate();

  // alpha = 0: pure weighted sum, 0.6*0.8 + 0.4*0.5 = 0.68.
  RewardBreakdown add = compose_reward(comps, weights, 0.0);
  CHECK(add.additive == doctest::Approx(0.68).epsilon(1e-12));
  CHECK(add.total == doctest::Approx(0.68).epsilon(1e-12));
  add.validate();

  // Blended.
  RewardBreakdown mix = compose_reward(comps, weights, 0.25);
  CHECK(mix.total == doctest::Approx(0.25 * 0.4 + 0.75 * 0.68).epsilon(1e-12));
  mix.validate();
  CHECK(mix.components.at("action") == 0.8);
}

TEST_CASE("compose_reward rejects bad components and weights") {
  const std::map<std::string, double> comps{{"a", 0.5}};
  CHECK_THROWS(compose_reward({{"a", 1.5}}, {{"a", 1.0}}, 1.0));   // component > 1
  CHECK_THROWS(compose_reward({{"a", -0.1}}, {{"a", 1.0}}, 1.0));  // component < 0
  CHECK_THROWS(compose_reward(comps, {{"a", -1.0}}, 1.0));         // negative weight
  CHECK_THROWS(compose_reward(comps, {{"a", 0.5}}, 1.0));          // weights sum != 1
  CHECK_THROWS(compose_reward(comps, {{"b", 1.0}}, 1.0));          // key mismatch
  CHECK_THROWS(compose_reward(comps, {{"a", 1.0}}, 1.5));          // alpha out of range
}

TEST_CASE("reward breakdown invariant is enforced") {
  RewardBreakdown b;
  b.multiplicative = 0.3;
  b.additive = 0.7;
  b.alpha = 0.5;
  b.total = 0.5;
  CHECK_NOTHROW(b.validate());
  b.total = 0.6;  // breaks total == alpha*mult + (1-alpha)*add
  CHECK_THROWS(b.validate());
  b.total = 0.5;
  b.alpha = 2.0;
  CHECK_THROWS(b.validate());
}

TEST_CASE("db_hash is order-insensitive over keys and order-sensitive over arrays") {
  const nlohmann::json a = {{"users", {{{"id", 1}, {"name", "ana"}}}}, {"flights", 3}};
  const nlohmann::json b = {{"flights", 3}, {"users", {{{"name", "ana"}, {"id", 1}}}}};
  CHECK(synth::db_hash(a) == synth::db_hash(b));

  nlohmann::json c = a;
  c["flights"] = 4;
  CHECK(synth::db_hash(a) != synth::db_hash(c));

  const nlohmann::json arr1 = nlohmann::json::array({1, 2});
  const nlohmann::json arr2 = nlohmann::json::array({2, 1});
  CHECK(synth::db_hash(arr1) != synth::db_hash(arr2));
}

TEST_CASE("scenario_hash tracks content") {
  synth::Scenario s;
  s.seed = 7;
  s.initial_message = "hello";
  const auto h = synth::scenario_hash(s);
  CHECK(h == synth::scenario_hash(s));  // stable
  synth::Scenario s2 = s;
  s2.initial_message = "hello!";
  CHECK(h != synth::scenario_hash(s2));
}

TEST_CASE("domain and skill names are stable strings") {
  CHECK(synth::domain_name(synth::Domain::kAirline) == "airline");
  CHECK(synth::domain_name(synth::Domain::kRetail) == "retail");
  CHECK(synth::domain_name(synth::Domain::kDevice) == "device");
  CHECK(synth::skill_name(synth::Skill::kCommunicate) == "communicate");
  CHECK(synth::skill_name(synth::Skill::kRecovery) == "recovery");
  CHECK(synth::skill_name(synth::Skill::kCombined) == "combined");
}
