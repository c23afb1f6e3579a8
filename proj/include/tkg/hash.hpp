#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tkg {

// FNV-1a, the stable content hash behind element ids and cache keys.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL) {
    std::uint64_t h = seed;
    for (char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// SplitMix64: a tiny deterministic generator used wherever seeded
// randomness must be bit-stable across platforms and standard-library
// versions (the synthetic harness, mock embedder, fuzzers).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform-ish integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    bool chance(double p) { return uniform() < p; }

private:
    std::uint64_t state_;
};

} // namespace tkg
