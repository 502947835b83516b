#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace puckit {

// Deterministic randomness for the whole toolkit.
//
// Engine: std::mt19937_64, which the C++ standard pins bit-for-bit, seeded
// with a 64-bit value. All distributions are implemented here from raw
// 64-bit draws instead of <random>'s distribution classes (those are
// implementation-defined), so a seed fully determines every artifact.
//
// Seed splitting: derive_seed() applies one SplitMix64 round per salt.
// Every component that needs its own stream (splitting, model init, epoch
// shuffles, head re-init, per-fold runs) derives a child seed from its
// parent seed and a purpose tag below, so one top-level integer reproduces
// an entire experiment.

namespace seed_tag {
inline constexpr std::uint64_t split = 1;        // train/validation split
inline constexpr std::uint64_t train_f = 2;      // labelling model f
inline constexpr std::uint64_t train_g = 3;      // positive/negative model g
inline constexpr std::uint64_t head_reinit = 4;  // transfer head re-draw
inline constexpr std::uint64_t fold_plan = 5;    // k-fold assignment shuffle
inline constexpr std::uint64_t fold_run = 6;     // per-(fold, seed) pipeline run
inline constexpr std::uint64_t model_init = 7;   // parameter initialization
inline constexpr std::uint64_t shuffle = 8;      // per-epoch example order
inline constexpr std::uint64_t transfer_source = 9;   // pretraining run
inline constexpr std::uint64_t transfer_target = 10;  // fine-tuning run
}  // namespace seed_tag

// One SplitMix64 step (public-domain mixer by Vigna, after Steele et al.).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t state = base ^ (salt * 0xd1b54a32d192ed03ull);
    return splitmix64(state);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt1, std::uint64_t salt2) {
    return derive_seed(derive_seed(base, salt1), salt2);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // 53-bit-mantissa uniform in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Unbiased integer in [0, n) via rejection sampling; n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (cosine branch). Consumes exactly two
    // uniforms per call; no cached second variate, so the draw count per
    // call is fixed.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Fisher-Yates, high index down, using below() for each swap.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace puckit
