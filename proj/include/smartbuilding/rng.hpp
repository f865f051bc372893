#ifndef SMARTBUILDING_RNG_HPP
#define SMARTBUILDING_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sb {

/// Seeded random stream shared by the simulated worlds.
///
/// Uniforms are built from the top 53 bits of mt19937_64 and normals use a
/// hand-rolled Box-Muller transform, so a given seed yields the same stream
/// on every standard library. std::normal_distribution gives no such promise.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// True with probability p. Always consumes exactly one uniform.
    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal. Always consumes exactly two uniforms.
    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent sub-seeds from one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace sb

#endif  // SMARTBUILDING_RNG_HPP
