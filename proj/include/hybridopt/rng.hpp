#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace hybridopt {

// Deterministic random source. mt19937_64 output is fixed by the standard,
// and all derived draws below are defined here rather than delegated to
// std:: distributions (whose algorithms are implementation-defined), so a
// given seed produces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision. One engine draw.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Exactly one engine draw; the floor-of-
  // product construction keeps the draw count deterministic (bias is
  // negligible for the desk-scale bounds used here).
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(bound));
  }

  // Standard normal via Box-Muller (cosine branch). Exactly two engine draws.
  double gaussian() {
    double u1 = uniform01();
    if (u1 < std::numeric_limits<double>::min()) {
      u1 = std::numeric_limits<double>::min();
    }
    const double u2 = uniform01();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hybridopt
