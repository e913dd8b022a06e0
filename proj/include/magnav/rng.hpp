#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "magnav/geometry.hpp"

namespace magnav {

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard; the Gaussian transform is done here (Box-Muller) rather than via
// std::normal_distribution, whose output is implementation-defined. Equal
// seeds therefore give byte-identical synthetic datasets on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }

  Vec3 normal3() {
    Vec3 v;
    v.x() = normal();
    v.y() = normal();
    v.z() = normal();
    return v;
  }

  // Independent stream for a named purpose, derived from the original seed.
  Rng fork(std::uint64_t stream_id) const { return Rng(mix(seed_, stream_id)); }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream_id) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace magnav
