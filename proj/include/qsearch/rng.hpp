#pragma once

#include <cmath>
#include <cstdint>

namespace qsearch {

// splitmix64 step; also used to derive stream states and per-point seeds.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Mix a master seed with a counter (trial index, grid index) into a fresh seed.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t x = master ^ (counter * 0xA0761D6478BD642FULL + 0xE7037ED1A0B428DBULL);
    return splitmix64(x);
}

// xoshiro256** with counter-based stream construction: the state for stream t
// is derived from (master_seed, t) alone, so any worker can rebuild the stream
// for trial t without coordination and results do not depend on scheduling.
class Rng {
  public:
    Rng(std::uint64_t master_seed, std::uint64_t stream) {
        std::uint64_t x = mix_seed(master_seed, stream);
        for (auto& w : s_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0,1), 53 random bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller; stateless (no cached second value) so the
    // draw count per observation is fixed and streams stay reproducible
    double next_gaussian() {
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), never log(0)
        return r * std::cos(6.28318530717958647692 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t s_[4];
};

}  // namespace qsearch
