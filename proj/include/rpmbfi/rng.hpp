// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace rpmbfi {

/// Deterministic pseudo-random source (xoshiro256**, splitmix64-seeded).
/// Self-contained so that identical seeds give identical streams on every
/// platform and toolchain; campaigns rely on that for byte-identical replays.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    /// Uniform in [0, bound); bound must be > 0.
    uint64_t below(uint64_t bound);

    /// Uniform double in [0, 1).
    double uniform01();

    bool chance(double p) { return uniform01() < p; }

    /// Index drawn proportionally to the (non-negative) weights.
    size_t pick_weighted(std::span<const double> weights);

    /// Independent child stream; distinct salts give unrelated streams.
    Rng fork(uint64_t salt);

    std::array<uint64_t, 4> state() const { return s_; }
    static Rng from_state(const std::array<uint64_t, 4>& s);

private:
    Rng() = default;
    std::array<uint64_t, 4> s_{};
};

}  // namespace rpmbfi
