#pragma once

#include "idcs/truth.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace test_support {

inline idcs::ProviderProfile profile(std::string id, double mean, double variance,
                                     std::size_t count = 10) {
    idcs::ProviderProfile p;
    p.provider = idcs::ProviderId{std::move(id)};
    p.error_moments.count = count;
    p.error_moments.mean = mean;
    p.error_moments.m2 = variance * static_cast<double>(count);
    p.calibrated = true;
    return p;
}

inline std::vector<idcs::View> views(const std::vector<double>& values) {
    std::vector<idcs::View> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back({idcs::ProviderId{"p" + std::to_string(i)}, values[i]});
    }
    return out;
}

// Oracles below are deliberately independent of the library's numerics.

/// erf by its Maclaurin series in long double; good to ~1e-12 for |x| <= 5.
inline double erf_series(double xd) {
    const long double x = xd;
    long double term = x;  // x^(2n+1)/n! with sign
    long double sum = x;
    for (int n = 1; n < 400; ++n) {
        term *= -x * x / n;
        const long double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-22L) {
            break;
        }
    }
    return static_cast<double>(2.0L / std::sqrt(std::numbers::pi_v<long double>) * sum);
}

inline double phi_series(double x) { return 0.5 * (1.0 + erf_series(x / std::numbers::sqrt2)); }

/// Composite Simpson integral of the N(mean, var) density over (lo, hi).
inline double simpson_prob(double mean, double var, double lo, double hi, int n = 20000) {
    const double sd = std::sqrt(var);
    auto pdf = [&](double x) {
        const double z = (x - mean) / sd;
        return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    };
    const double h = (hi - lo) / n;
    double s = pdf(lo) + pdf(hi);
    for (int i = 1; i < n; ++i) {
        s += pdf(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

}  // namespace test_support
