#include "idcs/stats.hpp"

#include "idcs/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace idcs {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_parameter: return "invalid-parameter";
        case Errc::invalid_input: return "invalid-input";
        case Errc::not_calibrated: return "not-calibrated";
        case Errc::unsupported_size: return "unsupported-size";
        case Errc::invalid_mode: return "invalid-mode";
        case Errc::invalid_redeclaration: return "invalid-redeclaration";
        case Errc::stale_stage: return "stale-stage";
        case Errc::empty_round: return "empty-round";
        case Errc::unknown_trade: return "unknown-trade";
        case Errc::corrupt_log: return "corrupt-log";
        case Errc::parse_error: return "parse-error";
        case Errc::unfillable: return "unfillable";
        case Errc::invalid_rule: return "invalid-rule";
        case Errc::missing_column: return "missing-column";
        case Errc::invalid_config: return "invalid-config";
    }
    return "unknown";
}

double GaussianParams::stddev() const { return std::sqrt(variance); }

double OnlineMoments::variance() const {
    if (count == 0) {
        return 0.0;
    }
    return std::max(0.0, m2 / static_cast<double>(count));
}

namespace {

// Upper tail 1 - Phi(x), accurate for large positive x.
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double interval_prob(const GaussianParams& g, double e_t) {
    if (!(e_t > 0.0) || std::isnan(e_t)) {
        throw Error(Errc::invalid_parameter,
                    "error threshold must be positive, got " + std::to_string(e_t));
    }
    if (g.variance < 0.0) {
        throw Error(Errc::invalid_parameter, "negative variance");
    }
    if (g.variance == 0.0) {
        return std::abs(g.mean) < e_t ? 1.0 : 0.0;
    }
    const double sigma = std::sqrt(g.variance);
    const double hi = (e_t - g.mean) / sigma;
    const double lo = (-e_t - g.mean) / sigma;
    double p = 0.0;
    if (lo > 0.0) {
        // Whole interval in the upper tail: subtract tails to keep precision.
        p = normal_sf(lo) - normal_sf(hi);
    } else if (hi < 0.0) {
        p = normal_cdf(hi) - normal_cdf(lo);
    } else {
        p = 1.0 - normal_cdf(lo) - normal_sf(hi);
    }
    return std::clamp(p, 0.0, 1.0);
}

OnlineMoments moments_update(OnlineMoments m, double observation) {
    ++m.count;
    const double delta = observation - m.mean;
    m.mean += delta / static_cast<double>(m.count);
    m.m2 += delta * (observation - m.mean);
    return m;
}

}  // namespace idcs
