#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace caprl {

// Error taxonomy. ProtocolError: a caller violated an interface contract
// (acting on a finished episode, duplicate registration). ConfigError: bad
// user-supplied configuration, mapped to exit code 2 by the CLI.
// TransportError: a gateway/endpoint failure, retryable at the call site.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 64-bit FNV-1a. Used for db hashing, seed derivation and artifact digests;
// stable across platforms and runs.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

constexpr std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

// Derives an independent stream id from a tag and a list of integers, e.g.
// derive_seed("episode", {global_seed, group_seed, replicate}).
std::uint64_t derive_seed(std::string_view tag, std::initializer_list<std::uint64_t> parts);
std::uint64_t derive_seed(std::string_view tag, const std::vector<std::uint64_t>& parts);

// Deterministic splitmix64-based generator. std::uniform_* distributions are
// implementation-defined, so all draws go through these helpers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Index drawn proportionally to the given nonnegative weights.
  std::size_t weighted_index(const std::vector<double>& weights);

  // Standard normal via Box-Muller on deterministic uniforms.
  double normal();

  template <typename T>
  const T& choice(const std::vector<T>& items) {
    return items[uniform_index(items.size())];
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// --- text helpers ---

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Collapses all whitespace runs to single spaces and lowercases; the
// normalization used for keyword / communicate-info matching.
std::string normalize_ws(std::string_view s);

// Case-insensitive substring match after whitespace normalization.
bool contains_normalized(std::string_view haystack, std::string_view needle);

// Lowercased alphanumeric runs; the shared tokenizer for feature hashing and
// lexical overlap scoring.
std::vector<std::string> tokenize(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Fixed-width lowercase hex of a 64-bit value, for digests in reports.
std::string hex64(std::uint64_t value);

}  // namespace caprl
