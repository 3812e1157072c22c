// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>

namespace lapsekit {

/// 64-bit FNV-1a. Used to derive per-video seeds and to key mock captions.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seeded generator with platform-independent draws. The standard
/// distributions are not bit-identical across library implementations, so
/// uniform and gaussian sampling are done by hand on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t next_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_index: n must be positive");
        const std::uint64_t span = std::numeric_limits<std::uint64_t>::max() / n * n;
        std::uint64_t r = engine_();
        while (r >= span) r = engine_();
        return r % n;
    }

    /// Standard normal draw (Box-Muller, spare cached).
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Per-video seed derived from the global seed and the source id, so that
/// batches can be processed in any order or in parallel and still reproduce.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view source_id) {
    std::uint64_t h = fnv1a64(source_id) ^ (global_seed * 0x9e3779b97f4a7c15ULL);
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

}  // namespace lapsekit
