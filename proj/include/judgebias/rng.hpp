// Counter-based pseudo-randomness. Every draw is keyed by (seed, string key,
// counter), so results are independent of evaluation order and identical
// across runs and platforms.
#pragma once

#include <cstdint>
#include <string_view>

namespace judgebias::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t keyed_u64(std::uint64_t seed, std::string_view key, std::uint64_t counter = 0) {
    return splitmix64(splitmix64(seed ^ fnv1a64(key)) + counter);
}

// Uniform in [0, 1) with 53 bits of precision.
inline double keyed_u01(std::uint64_t seed, std::string_view key, std::uint64_t counter = 0) {
    return static_cast<double>(keyed_u64(seed, key, counter) >> 11) * 0x1.0p-53;
}

// Small sequential generator for shuffles and fixture synthesis. Not
// std::shuffle-backed: the draw sequence must be identical on every
// standard library implementation.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t next_u64() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return splitmix64(state_);
    }

    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Uniform integer in [0, n). Modulo bias is negligible for the small n
    // used here.
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    std::uint64_t state_;
};

}  // namespace judgebias::rng
