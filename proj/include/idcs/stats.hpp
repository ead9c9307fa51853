#pragma once

#include <cstdint>

namespace idcs {

/// Scalar Gaussian in commodity units.
struct GaussianParams {
    double mean = 0.0;
    double variance = 0.0;

    double stddev() const;
    friend bool operator==(const GaussianParams&, const GaussianParams&) = default;
};

/// Applied to a zero-variance profile before it is used as a weight source.
inline constexpr double kVarianceFloor = 1e-12;

/// Running count, mean and sum of squared deviations (Welford).
struct OnlineMoments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    /// Population variance, m2 / count; zero when empty.
    double variance() const;
    GaussianParams gaussian() const { return {mean, variance()}; }

    friend bool operator==(const OnlineMoments&, const OnlineMoments&) = default;
};

/// Standard normal CDF.
double normal_cdf(double x);

/// P(-e_t < X < e_t) for X ~ g. A zero-variance g is a point mass at its mean.
double interval_prob(const GaussianParams& g, double e_t);

OnlineMoments moments_update(OnlineMoments m, double observation);

}  // namespace idcs
