#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "caprl/env/env.hpp"
#include "caprl/synth/builtin.hpp"

int main(int argc, char** argv) {
  caprl::synth::ensure_builtin_envs(caprl::env::global_registry());
  return doctest::Context(argc, argv).run();
}
