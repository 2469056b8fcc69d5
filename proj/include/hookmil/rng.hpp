#pragma once

#include <cstdint>

namespace hookmil {

// xoshiro256** seeded through splitmix64. The algorithm is fixed by this
// project (not delegated to <random>) so that identical seeds produce
// identical streams on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double();

    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (one fresh pair per call, second
    // value discarded; keeps the draw sequence independent of call sites).
    double normal();

    // N(0, stddev^2) restricted to [-bound_sigmas*stddev, +bound_sigmas*stddev]
    // by rejection.
    double truncated_normal(double stddev, double bound_sigmas = 2.0);

    // Uniform integer in [0, bound), unbiased via rejection.
    std::uint64_t below(std::uint64_t bound);

    // Independent deterministic substream, e.g. one per epoch or sweep cell.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t state_[4];
};

}  // namespace hookmil
