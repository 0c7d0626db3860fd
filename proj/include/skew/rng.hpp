#pragma once

#include <cmath>
#include <cstdint>

namespace skew {

/// xoshiro256++ with splitmix64 seeding. Each path gets its own substream
/// keyed by (seed, stream), so estimators are identical under any thread
/// schedule.
class Rng {
public:
    static Rng substream(uint64_t seed, uint64_t stream) {
        Rng r;
        uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
        for (int i = 0; i < 4; i++) r.s_[i] = splitmix64(x);
        r.have_ = false;
        return r;
    }

    uint64_t next() {
        uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// uniform on (0,1), never 0 or 1
    double uniform01() { return (next() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

    /// standard normal via Box-Muller (pairs cached)
    double normal() {
        if (have_) {
            have_ = false;
            return cached_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_ = true;
        return r * std::cos(a);
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double cached_ = 0;
    bool have_ = false;
};

} // namespace skew
