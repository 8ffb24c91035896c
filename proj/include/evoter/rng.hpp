#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace evoter {

// Splitmix64 finalizer. Stateless 64-bit mixer used both as the generator
// core and as the stream-derivation hash.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Stream derivation: fold each label into the seed with one mix64 round.
// derive(s, a, b, ...) == derive(derive(s, a), b, ...). All reproducibility
// guarantees (sweep cells, per-step decision streams) are built on this.
inline std::uint64_t derive(std::uint64_t seed) { return seed; }

template <typename... Rest>
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t label, Rest... rest) {
    return derive(mix64(seed ^ (label + kGolden)), rest...);
}

// Counter-based splitmix64 stream. Distinct seeds give independent streams;
// deterministic across platforms (no libstdc++ distribution objects).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Unbiased integer in [0, n) (Lemire multiply-shift with rejection).
    std::uint64_t uniform_below(std::uint64_t n) {
        unsigned __int128 m = (unsigned __int128)next_u64() * n;
        auto lo = (std::uint64_t)m;
        if (lo < n) {
            std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                m = (unsigned __int128)next_u64() * n;
                lo = (std::uint64_t)m;
            }
        }
        return (std::uint64_t)(m >> 64);
    }

    // Uniform in [0, 1), 53 significant bits.
    double real01() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return real01() < p;
    }

    double exponential(double rate) { return -std::log1p(-real01()) / rate; }

    // Failures before the first success of a Ber(q) sequence, q in (0, 1].
    std::uint64_t geometric_failures(double q) {
        if (q >= 1.0) return 0;
        double k = std::floor(std::log1p(-real01()) / std::log1p(-q));
        if (k >= 9.0e18) return (std::uint64_t)9.0e18;
        return (std::uint64_t)k;
    }

  private:
    std::uint64_t state_;
};

} // namespace evoter
