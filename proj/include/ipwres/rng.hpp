#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "ipwres/stats.hpp"

namespace ipwres {

//! Philox 4x64-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
//!
//! Stateless: each 256-bit counter maps to an independent 256-bit block under
//! a 128-bit key. The simulator addresses blocks as
//! (stream, purpose, index, draw), so every random quantity has a fixed
//! coordinate and extending a simulation never perturbs existing draws.
struct Philox4x64 {
    static constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                              std::array<std::uint64_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi0, hi1;
            const std::uint64_t lo0 = mulhilo(kMult0, ctr[0], hi0);
            const std::uint64_t lo1 = mulhilo(kMult1, ctr[2], hi1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

  private:
    static std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
        const __uint128_t p = static_cast<__uint128_t>(a) * b;
        hi = static_cast<std::uint64_t>(p >> 64);
        return static_cast<std::uint64_t>(p);
    }
};

//! Deterministic random field keyed by a 64-bit seed. Values are addressed,
//! never sequenced, so any draw can be regenerated in isolation.
class RandomField {
  public:
    explicit RandomField(std::uint64_t seed) : key_{seed, mix_seed(seed)} {}

    std::uint64_t bits(std::uint64_t stream, std::uint64_t purpose, std::uint64_t index,
                       std::uint64_t draw) const {
        return Philox4x64::block({stream, purpose, index, draw}, key_)[0];
    }

    //! Uniform on [0, 1) with 53-bit resolution.
    double uniform(std::uint64_t stream, std::uint64_t purpose, std::uint64_t index,
                   std::uint64_t draw) const {
        return static_cast<double>(bits(stream, purpose, index, draw) >> 11) * 0x1.0p-53;
    }

  private:
    // Second key word derived from the seed so nearby seeds get distant keys.
    static std::uint64_t mix_seed(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 2> key_;
};

//! Sequential view over one (stream, purpose, index) coordinate, for
//! algorithms that consume a variable number of uniforms.
class DrawSequence {
  public:
    DrawSequence(const RandomField& field, std::uint64_t stream, std::uint64_t purpose,
                 std::uint64_t index)
        : field_(&field), stream_(stream), purpose_(purpose), index_(index) {}

    double next_uniform() { return field_->uniform(stream_, purpose_, index_, draw_++); }

  private:
    const RandomField* field_;
    std::uint64_t stream_, purpose_, index_;
    std::uint64_t draw_ = 0;
};

//! Exact Poisson sampling by CDF inversion. Means above 30 are split into
//! chunks of at most 30 (Poisson additivity) to keep e^{-mean} well inside
//! double range.
inline std::uint64_t sample_poisson(DrawSequence& draws, double mean) {
    if (mean < 0.0 || !std::isfinite(mean))
        throw std::invalid_argument("sample_poisson: mean must be finite and >= 0");
    std::uint64_t total = 0;
    while (mean > 0.0) {
        const double chunk = std::min(mean, 30.0);
        mean -= chunk;
        const double u = draws.next_uniform();
        double p = std::exp(-chunk);
        double cdf = p;
        std::uint64_t k = 0;
        const std::uint64_t cap = static_cast<std::uint64_t>(10.0 * chunk) + 100;
        while (u > cdf && k < cap) {
            ++k;
            p *= chunk / static_cast<double>(k);
            cdf += p;
        }
        total += k;
    }
    return total;
}

//! Standard normal via inverse CDF of a uniform draw.
inline double sample_normal(double uniform01) {
    return normal_quantile(uniform01);
}

}  // namespace ipwres
