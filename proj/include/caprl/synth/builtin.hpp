#pragma once

#include "caprl/env/env.hpp"
#include "caprl/synth/sdr.hpp"
#include "caprl/synth/token_drill.hpp"

namespace caprl::synth {

struct BuiltinOptions {
  UserSimFactory sdr_user_factory = scripted_user_factory();
  SdrOptions sdr;
  DrillOptions drill;
};

// Registers the built-in environments:
//   structured_data_game   multi-turn record-database dialogue (airline/retail)
//   tec_game               device assistant with permission blockers
//   copy_drill / partner_drill / successor_drill   single-family token tasks
//   skill_mix_game         0.4 / 0.3 / 0.3 mixture of the three families
void register_builtin_envs(env::EnvRegistry& reg, const BuiltinOptions& opts = {});

// register_builtin_envs, but a no-op when they are already present.
void ensure_builtin_envs(env::EnvRegistry& reg);

}  // namespace caprl::synth
