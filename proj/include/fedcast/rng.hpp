#pragma once

// Seed derivation and deterministic sampling helpers.
//
// Every random decision in the simulator draws from an Rng seeded through
// derive_seed(master, purpose, round, client), so results do not depend on
// scheduling order: a client trained on a worker thread consumes exactly the
// stream it would have consumed serially.

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "fedcast/error.hpp"

namespace fedcast {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Child seed for one (purpose, round, client) cell of the experiment.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                           std::uint64_t round = 0, std::uint64_t client = 0) {
    std::uint64_t s = splitmix64(master ^ fnv1a64(purpose));
    s = splitmix64(s ^ (round * 0xD6E8FEB86659FD93ull));
    s = splitmix64(s ^ (client * 0xA5A5A5A5A5A5A5A5ull));
    return s;
}

/// mt19937_64 with portable bounded/unit-interval draws (the std distributions
/// are not bit-specified across standard libraries, these are).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Uniform integer in [0, n) by masked rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw Error("Rng::below: empty range");
        if (n == 1) return 0;
        const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(n - 1);
        for (;;) {
            const std::uint64_t x = engine_() & mask;
            if (x < n) return x;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fedcast
