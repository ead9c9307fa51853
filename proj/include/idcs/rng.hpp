#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace idcs {

/// Portable random stream. The engine is std::mt19937_64 (its output is fixed
/// by the C++ standard); every derived draw is computed here rather than by
/// the implementation-defined <random> distributions:
///
///   uniform01()  (x >> 11) * 2^-53
///   normal()     Box-Muller, z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), one
///                value per two uniforms, nothing cached
///   below(n)     floor(uniform01() * n)
///   shuffle      Fisher-Yates from the back, j = below(i + 1)
///
/// Repetition r of an experiment seeded with s uses Rng(s + r).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform01();
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    std::size_t below(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// 0..n-1 in shuffled order.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace idcs
