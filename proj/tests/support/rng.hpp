// Test-local random source, deliberately independent of the library's one.
#pragma once

#include <cstdint>

namespace test_support {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x1234567ull) {}

    std::uint64_t next() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * unit;
    }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    /// Bernoulli draw.
    bool chance(double p) { return uniform(0.0, 1.0) < p; }

  private:
    std::uint64_t state_;
};

}  // namespace test_support
