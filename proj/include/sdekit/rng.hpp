#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "sdekit/hash.hpp"

namespace sdekit {

// Deterministic PRNG with cheap labeled/indexed substream derivation.
// splitmix64 over a counter: output k of stream s is a pure function of
// (s, k), so runs are bit-identical across platforms and path-level
// parallelism cannot reorder draws.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : base_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

    static Rng from_label(std::uint64_t seed, std::string_view label) {
        return Rng(derive_seed(seed, label));
    }

    // Independent child stream; derivation is one-way so sibling streams
    // never collide for distinct indices.
    Rng substream(std::uint64_t index) const { return Rng(derive_seed(base_, index)); }
    Rng substream(std::string_view label) const { return Rng(derive_seed(base_, label)); }

    std::uint64_t next_u64() { return splitmix64(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Uniform on [0, 1): top 53 bits.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Box-Muller, cosine branch only: exactly two uniforms per draw, so the
    // stream position after n draws is n-independent of the values drawn.
    double next_gaussian() {
        double u1 = 1.0 - next_uniform();  // (0, 1]
        double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Inverse-CDF Poisson from a single uniform. One uniform per call keeps
    // the stream position independent of the sampled count, which is what
    // makes frozen-draw calibration see consistent draws as the intensity
    // parameter moves.
    int next_poisson(double mean) {
        if (mean <= 0.0) {
            next_uniform();  // keep stream position schedule-independent
            return 0;
        }
        double u = next_uniform();
        double p = std::exp(-mean);
        double cum = p;
        int k = 0;
        while (u > cum && k < 10000) {
            ++k;
            p *= mean / k;
            cum += p;
        }
        return k;
    }

  private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace sdekit
