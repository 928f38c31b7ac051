#ifndef DBAGUARD_RNG_HPP
#define DBAGUARD_RNG_HPP

#include <cstdint>
#include <random>
#include <span>

namespace dbaguard {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Generator for one pulse batch. The stream depends only on (seed, batch),
/// so results do not depend on how batches are spread across threads.
class BatchRng {
public:
    BatchRng(std::uint64_t seed, std::uint64_t batch)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(batch + 0x632BE59BD9B4E019ULL))) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Index drawn from a cumulative distribution (last entry treated as 1).
    std::size_t categorical(std::span<const double> cumulative) {
        const double u = uniform();
        for (std::size_t i = 0; i + 1 < cumulative.size(); ++i)
            if (u < cumulative[i]) return i;
        return cumulative.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dbaguard

#endif  // DBAGUARD_RNG_HPP
