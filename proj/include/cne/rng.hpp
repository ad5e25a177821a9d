#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace cne {

// Counter-based RNG. One master seed derives independent per-epoch /
// per-batch streams, so shuffling and negative sampling stay reproducible
// no matter how work is scheduled.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // avoid the all-zero fixed point and decorrelate small seeds
        next();
        next();
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // stream for (seed, epoch), (seed, epoch, batch), ...
    static Rng stream(std::uint64_t seed, std::uint64_t a) {
        return Rng(mix(seed, a));
    }
    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        return Rng(mix(mix(seed, a), b));
    }

    std::uint64_t next() {  // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, bound); bound << 2^64 so modulo bias is negligible
    std::uint64_t bounded(std::uint64_t bound) { return next() % bound; }

    double uniform01() {  // [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller, one value per call
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0, u2 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        have_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {  // Fisher-Yates
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cne
