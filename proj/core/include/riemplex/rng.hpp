#pragma once

#include <cstdint>
#include <random>

namespace riemplex {

/// Single per-run random source. Every Monte Carlo path draws from one of
/// these, seeded from the run configuration, so reruns with the same seed
/// are bit-identical.
class rng_t {
  public:
    explicit rng_t(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

} // namespace riemplex
