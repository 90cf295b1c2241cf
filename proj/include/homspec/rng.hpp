#pragma once

#include <cmath>
#include <cstdint>

namespace homspec {

// Counter-based random stream built on the SplitMix64 finalizer.
//
// Every (seed, stream_tag, index) triple names an independent stream, so
// work units (delay points, settings, commands) can be processed in any
// order or in parallel and still reproduce bit-identical results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_tag, std::uint64_t index) {
        base_ = mix(mix(seed ^ 0x9e3779b97f4a7c15ull) + stream_tag);
        base_ = mix(base_ + 0xbf58476d1ce4e5b9ull * index);
    }

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ull;
        return mix(base_ ^ counter_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via the polar method; one spare value cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream tags so each consumer of the top-level seed gets its own substream.
namespace rng_stream {
inline constexpr std::uint64_t scan_point = 0x1001;
inline constexpr std::uint64_t herald = 0x1002;
inline constexpr std::uint64_t beat = 0x1003;
inline constexpr std::uint64_t setting = 0x1004;
}  // namespace rng_stream

}  // namespace homspec
