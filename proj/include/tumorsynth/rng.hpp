// Seeded random streams with platform-independent output.
//
// The standard distributions (std::normal_distribution etc.) are allowed to
// differ between library implementations, so every draw here is derived
// directly from mt19937_64 words to keep synthesized volumes byte-identical
// across toolchains.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tumorsynth {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Counter-based child seed: independent of how many draws other streams used.
inline uint64_t derive_seed(uint64_t root, uint64_t index, uint64_t stream = 0) {
    return splitmix64(splitmix64(splitmix64(root) ^ (index + 0x632BE59BD9B4E019ull)) ^
                      (stream * 0x8CB92BA72F3D8DD7ull + 1));
}

/// Named sub-streams used per tumor.
enum class Stream : uint64_t { Parameters = 1, Placement = 2, Shape = 3, Texture = 4, Preset = 5 };

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}
    Rng(uint64_t root, uint64_t index, Stream stream)
        : engine_(derive_seed(root, index, static_cast<uint64_t>(stream))) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], unbiased by rejection.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<int64_t>(engine_());
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return lo + static_cast<int64_t>(r % span);
    }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace tumorsynth
