#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldnet {

// Simulation time, seconds since the scenario epoch.
using Seconds = double;

inline constexpr Seconds kMinute = 60.0;
inline constexpr Seconds kHour = 3600.0;
inline constexpr Seconds kDay = 86400.0;

// Error hierarchy. Callers that only care about "it failed" catch Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input: malformed scenario, out-of-range parameter, violated precondition.
struct ValidationError : Error {
  using Error::Error;
};

// Lookup of an id that does not exist (node, channel, key, link).
struct NotFoundError : Error {
  using Error::Error;
};

struct TopologyError : Error {
  using Error::Error;
};

// FNV-1a, 64 bit. Stable across platforms and standard libraries, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0,1) from 53 high bits.
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

using Rng = std::mt19937_64;

// One root seed, forked per component id. Adding a component never perturbs
// the stream of another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t component_seed(std::string_view component) const {
    return splitmix64(seed_ ^ fnv1a(component));
  }

  Rng fork(std::string_view component) const { return Rng{component_seed(component)}; }

 private:
  std::uint64_t seed_;
};

}  // namespace fieldnet
