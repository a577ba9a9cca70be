// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace marsit {

// Domain-separation tag mixed into every stream key.  Two different uses of
// randomness at the same (worker, round, segment) coordinates must never
// share a stream, otherwise their draws would be correlated.
enum class RngPurpose : std::uint64_t {
    dataset = 1,    // synthetic data generation
    model_init = 2, // parameter initialization
    batch = 3,      // minibatch index sampling
    ssdm = 4,       // stochastic sign compression
    merge = 5,      // transient disagreement coins
    trial = 6,      // analysis experiment trials
};

// Deterministic counter-based random stream.  The key is derived from
// (global_seed, purpose, worker, round, segment) and the sequence is a
// SplitMix64 walk from that key, so any simulated worker can be replayed in
// isolation and the full run is bit-identical regardless of execution order
// across workers.
class RngStream {
public:
    RngStream(std::uint64_t global_seed, RngPurpose purpose, std::uint64_t worker,
              std::uint64_t round, std::uint64_t segment) {
        std::uint64_t h = mix(global_seed ^ 0x6a09e667f3bcc909ull);
        h = mix(h ^ (static_cast<std::uint64_t>(purpose) * kGamma));
        h = mix(h ^ ((worker + 1) * kGamma));
        h = mix(h ^ ((round + 1) * kGamma));
        h = mix(h ^ ((segment + 1) * kGamma));
        state_ = h;
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    // Uniform draw in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // One uniform is consumed per call even for p <= 0 or p >= 1, so the
    // draw count does not depend on the probability.
    bool next_bernoulli(double p) {
        return next_uniform() < p;
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double next_gaussian() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
};

} // namespace marsit
