#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace noisekit {

// Deterministic PRNG used everywhere the toolkit needs randomness.
//
// The algorithm is SplitMix64: a Weyl sequence with increment
// 0x9E3779B97F4A7C15 passed through the Stafford/Steele mix13 finalizer.
// Uniform doubles take the top 53 bits of a draw; gaussians come from the
// Box-Muller transform with the spare value cached. Child streams are
// derived from the construction seed and a stream id only, never from the
// current draw position, so splits reproduce regardless of how many draws
// the parent has made.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be positive.
    std::size_t next_below(std::size_t n) {
        return static_cast<std::size_t>(next_double() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Independent child stream; depends only on the construction seed and id.
    Rng split(std::uint64_t stream) const {
        return Rng(mix64(seed_ ^ mix64(stream + 0x9E3779B97F4A7C15ULL)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = next_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Named sub-seed: FNV-1a over the tag, mixed with the base seed. Components
// use distinct tags so adding a consumer never shifts another one's stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return Rng::mix64(base ^ Rng::mix64(h));
}

} // namespace noisekit
