#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace psma::detail {

// Streams keep topology and fading draws independent for the same user seed.
enum class Stream : std::uint32_t { Topology = 1, Fading = 2 };

class Rng {
public:
  Rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits; portable across standard libraries.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unit-mean exponential, never exactly zero.
  double exponential() {
    double e = 0.0;
    while (e == 0.0) e = -std::log1p(-uniform());
    return e;
  }

private:
  std::mt19937_64 engine_;
};

} // namespace psma::detail
