#ifndef MUSEV_RNG_HPP
#define MUSEV_RNG_HPP

// Counter-based pseudo-random generation: every draw is a pure function of
// (seed, stream, counter), so parallel voxel loops stay deterministic and
// order-independent.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace musev {

namespace detail {
inline std::uint64_t avalanche64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}
}  // namespace detail

struct CounterRng {
    std::uint64_t seed{0};

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        std::uint64_t h = detail::avalanche64(seed + 0x9e3779b97f4a7c15ULL);
        h = detail::avalanche64(h ^ (stream + 0xbf58476d1ce4e5b9ULL));
        h = detail::avalanche64(h ^ (counter + 0x94d049bb133111ebULL));
        return h;
    }

    // uniform in [0, 1)
    double uniform01(std::uint64_t stream, std::uint64_t counter) const {
        return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
    }

    std::uint64_t uniform_below(std::uint64_t stream, std::uint64_t counter, std::uint64_t n) const {
        return n == 0 ? 0 : bits(stream, counter) % n;
    }

    // standard normal via Box-Muller; consumes counters 2c and 2c+1
    double normal(std::uint64_t stream, std::uint64_t counter) const {
        double u1 = uniform01(stream, 2 * counter);
        const double u2 = uniform01(stream, 2 * counter + 1);
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

}  // namespace musev

#endif
