#pragma once

#include <cmath>
#include <cstdint>

#include "tcr/vec3.hpp"

namespace tcr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based deterministic random stream. Every draw is addressed by an
// explicit counter, so the sequence is independent of call order, platform
// and thread scheduling. Gaussian draws use Box-Muller on this stream; no
// libc++/libstdc++ distribution objects are involved anywhere.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    // Independent substream, e.g. one per subsystem or per frame.
    CounterRng stream(std::uint64_t id) const {
        return CounterRng(splitmix64(seed_ ^ splitmix64(id + 0x51ed2701ull)));
    }

    std::uint64_t word(std::uint64_t counter) const {
        return splitmix64(seed_ ^ (counter * 0xd1b54a32d192ed03ull + 0x63652362ull));
    }

    // Uniform in [0,1), 53-bit resolution.
    double u01(std::uint64_t counter) const {
        return static_cast<double>(word(counter) >> 11) * 0x1.0p-53;
    }

    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * u01(counter);
    }

    // One counter covers two underlying uniforms; counters c and c+1 give
    // independent normals.
    double normal(std::uint64_t counter) const {
        double u1 = u01(2 * counter);
        double u2 = u01(2 * counter + 1);
        // 1-u1 in (0,1] keeps the log argument away from zero.
        return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
    }

    Vec3 normal3(std::uint64_t counter) const {
        return {normal(3 * counter), normal(3 * counter + 1), normal(3 * counter + 2)};
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

} // namespace tcr
