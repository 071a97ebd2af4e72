#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace clarq {

// Deterministic RNG helpers. Draws are spelled out here instead of using
// std distributions so output streams are fixed by the seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, n). n must be > 0.
    std::size_t index(std::size_t n) {
        // rejection sampling over the top bits, no modulo bias
        std::uint64_t bound = n;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    // Uniform in [0, 1).
    double real() { return (engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [-r, r).
    double symmetric(double r) { return (2.0 * real() - 1.0) * r; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// FNV-1a, used for deriving per-stage seeds and config hashes.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed for a named sub-stream of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
    return fnv1a(name, master ^ 0x9e3779b97f4a7c15ULL);
}

} // namespace clarq
