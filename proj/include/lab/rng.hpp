#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace lab {

// Deterministic RNG. All distribution scaling is implemented by hand on top
// of std::mt19937_64 because the standard library distributions are not
// bit-stable across implementations, and every dataset / checkpoint here is
// required to be reproducible from (config, seed).
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // [0, n)
    uint64_t uniform_int(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Independent child stream keyed off the original seed, not the current
    // engine position, so forks are stable no matter how much the parent
    // has been consumed.
    Rng fork(uint64_t salt) const {
        return Rng(splitmix(seed_ ^ (0x9e3779b97f4a7c15ULL * (salt + 1))));
    }

    uint64_t seed() const { return seed_; }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 gen_;
    uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace lab
