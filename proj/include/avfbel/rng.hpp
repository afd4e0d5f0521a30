#pragma once

#include <cstdint>
#include <string_view>

namespace avfbel {

// Counter-based splittable generator. Every stream is a pure function of
// (key, counter), so child generators derived with split() are independent of
// how much the parent has been consumed, and identical seeds reproduce
// identical sequences bit-for-bit on any platform.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ kKeyTweak)) {}

    // Derived stream; deterministic in (parent key, stream id).
    SplitRng split(std::uint64_t stream) const {
        return SplitRng(FromKey{}, mix(key_ ^ mix(stream + kStreamTweak)));
    }

    SplitRng split(std::string_view label) const { return split(fnv1a(label)); }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kCounterTweak); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    struct FromKey {};
    SplitRng(FromKey, std::uint64_t key) : key_(key) {}

    static constexpr std::uint64_t kKeyTweak     = 0x9e3779b97f4a7c15ull;
    static constexpr std::uint64_t kStreamTweak  = 0xbf58476d1ce4e5b9ull;
    static constexpr std::uint64_t kCounterTweak = 0x94d049bb133111ebull;

    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace avfbel
