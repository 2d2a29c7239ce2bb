#ifndef SYLGL_RNG_HPP
#define SYLGL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace sylgl {

/// SplitMix64; used only to expand seeds into generator state.
struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// xoshiro256++ with a SplitMix64-expanded seed. Portable: all arithmetic
/// is on uint64, so streams are identical on every platform.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0,1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on (0,1]; safe as a log() argument.
    double uniform01_open_low() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection from the top to avoid modulo bias.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

/// Stream-splitting rule: substream `i` of master seed `s` is a fresh
/// xoshiro256++ generator seeded with mix(s, i). Samplers use one substream
/// per observation, so datasets are reproducible independent of how the
/// observation loop is scheduled.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 sm{seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))};
    return sm.next();
}

inline Xoshiro256pp substream(std::uint64_t seed, std::uint64_t stream) {
    return Xoshiro256pp(mix_seed(seed, stream));
}

/// Standard normal draws via Box-Muller; consumes exactly two uniforms per
/// pair, so the stream layout is fixed.
class GaussianStream {
public:
    explicit GaussianStream(Xoshiro256pp rng) : rng_(rng) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.uniform01_open_low();
        const double u2 = rng_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    Xoshiro256pp rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sylgl

#endif
