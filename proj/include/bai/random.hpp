#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bai {

// splitmix64 finalizer; used for seed derivation only.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-trial seed. Depends only on its three inputs, so adding a strategy
// to an experiment never changes the seeds of the others.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) noexcept {
    return mix64(mix64(master ^ fnv1a64(stream)) + mix64(index));
}

// Owned random stream. One instance per trial; not shared between threads.
class RandomSource {
public:
    using Engine = std::mt19937_64;

    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return unit_(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

    double normal() { return normal_(engine_); }

    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    std::uint64_t next_u64() { return engine_(); }

    // Independent child stream, e.g. for Monte Carlo integration inside a trial.
    RandomSource fork(std::string_view tag) { return RandomSource(derive_seed(engine_(), tag, 0)); }

    Engine& engine() { return engine_; }

private:
    Engine engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bai
