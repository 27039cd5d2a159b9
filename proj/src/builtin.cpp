#include "caprl/synth/builtin.hpp"

#include "caprl/synth/tec.hpp"

namespace caprl::synth {

void register_builtin_envs(env::EnvRegistry& reg, const BuiltinOptions& opts) {
  reg.register_env(sdr_spec(), [user = opts.sdr_user_factory, sdr = opts.sdr]() {
    return std::make_unique<SdrEnv>(user, sdr);
  });
  reg.register_env(tec_spec(), []() { return std::make_unique<TecEnv>(); });

  auto single = [&reg, &opts](const std::string& name, DrillRule rule) {
    reg.register_env(drill_spec(name), [rule, drill = opts.drill]() {
      return std::make_unique<TokenDrillEnv>(std::vector<DrillRule>{rule},
                                             std::vector<double>{1.0}, drill);
    });
  };
  single("copy_drill", DrillRule::kCopy);
  single("partner_drill", DrillRule::kPartner);
  single("successor_drill", DrillRule::kSuccessor);

  reg.register_env(drill_spec("skill_mix_game"), [drill = opts.drill]() {
    return std::make_unique<TokenDrillEnv>(
        std::vector<DrillRule>{DrillRule::kCopy, DrillRule::kPartner, DrillRule::kSuccessor},
        std::vector<double>{0.4, 0.3, 0.3}, drill);
  });
}

void ensure_builtin_envs(env::EnvRegistry& reg) {
  if (!reg.contains("skill_mix_game")) register_builtin_envs(reg);
}

}  // namespace caprl::synth
