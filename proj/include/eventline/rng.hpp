#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace eventline {

// xoshiro256** seeded through splitmix64.
//
// All randomness in the project goes through this generator instead of the
// <random> distribution adapters, whose output is not pinned by the standard.
// Byte-identical reruns across toolchains are a hard requirement.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, bound), unbiased
    uint64_t uniform_int(uint64_t bound) {
        if (bound == 0) return 0;
        const uint64_t threshold = (0 - bound) % bound; // 2^64 mod bound
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // uniform integer in [lo, hi)
    int64_t range_i64(int64_t lo, int64_t hi) {
        return lo + int64_t(uniform_int(uint64_t(hi - lo)));
    }

    // uniform real in [lo, hi)
    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool coin() { return (next_u64() & 1) != 0; }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = size_t(uniform_int(uint64_t(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t s_[4];
};

} // namespace eventline
