#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace amrl {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable stream derivation so every worker/env/eval gets an independent seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x5851f42d4c957f2dULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

// mt19937_64 plus hand-pinned draw helpers. std::*_distribution is
// implementation-defined, so sampling goes through these to keep trajectories
// reproducible for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0,1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0,n)
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(eng_()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Sample an index from an unnormalized nonnegative weight vector.
    int categorical(const double* w, int n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += w[i];
        double u = uniform() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += w[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    int categorical(const std::vector<double>& w) { return categorical(w.data(), static_cast<int>(w.size())); }

private:
    std::mt19937_64 eng_;
};

}  // namespace amrl
