#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace aswd {

// splitmix64 finalizer; derives independent seeds from a base seed and a
// salt (per experiment-matrix cell, per flow sub-stream, ...).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over a string; stable cell hashing for seed derivation.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seeded random stream. All randomness in the library flows through this
// wrapper so that a (seed, call order) pair pins every draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    double normal() { return normal_(eng_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }

    std::uint64_t integer(std::uint64_t n) { // uniform in [0, n)
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
    }

    std::uint64_t seed() const { return seed_; }

    // Independent sub-stream derived from this stream's seed.
    Rng substream(std::uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace aswd
