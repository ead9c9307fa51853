#pragma once

#include "idcs/stats.hpp"

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace idcs {

/// Opaque provider token. Ascending order of `value` is the tie-break order
/// used by every ranking in the library.
struct ProviderId {
    std::string value;

    friend auto operator<=>(const ProviderId&, const ProviderId&) = default;
};

struct View {
    ProviderId provider;
    double value = 0.0;

    friend bool operator==(const View&, const View&) = default;
};

struct ProviderProfile {
    ProviderId provider;
    OnlineMoments error_moments;  // signed error: supplied view minus reference
    bool calibrated = false;

    GaussianParams error_dist() const { return error_moments.gaussian(); }
    friend bool operator==(const ProviderProfile&, const ProviderProfile&) = default;
};

struct WeightEntry {
    ProviderId provider;
    double weight = 0.0;

    friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

struct WeightVector {
    std::vector<WeightEntry> entries;

    double sum() const;
    std::optional<double> weight_of(const ProviderId& id) const;
    friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

enum class Strategy { idcsw, mean, median, k_voting, k_sources };

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;

struct Estimate {
    double truth = 0.0;
    GaussianParams error_dist;
    double confidence = 0.0;
    WeightVector weights;

    friend bool operator==(const Estimate&, const Estimate&) = default;
};

inline constexpr double kDefaultErrorThreshold = 1.0;
inline constexpr std::size_t kDefaultK = 3;

/// Weighted average of the views, sum(w v) / sum(w).
double weighted_truth(std::span<const View> views, const WeightVector& weights);

/// w_i proportional to P(|e_i| < e_t) under each provider's error Gaussian.
WeightVector idcsw_weights(std::span<const ProviderProfile> profiles, double e_t);

/// Gaussian of the weighted-average error assuming independent providers.
GaussianParams composed_error(std::span<const ProviderProfile> profiles,
                              const WeightVector& weights);

double confidence_level(const GaussianParams& error_dist, double e_t);

WeightVector mean_weights(std::span<const View> views);
WeightVector median_weights(std::span<const View> views);

/// 1/k on the k views with the smallest total absolute distance to all
/// other views.
WeightVector k_voting_weights(std::span<const View> views, std::size_t k);

/// 1/k on the k providers with the highest P(|e_i| < e_t).
WeightVector k_sources_weights(std::span<const ProviderProfile> profiles,
                               std::size_t k, double e_t);

/// Exhaustive search over the simplex lattice with spacing `step`
/// (0.01, 0.02 or 0.05) for the weights maximising P(|e*| < e_t).
/// Supports at most four providers.
WeightVector grid_optimal_weights(std::span<const ProviderProfile> profiles,
                                  double e_t, double step);

/// Objective shared by the optimiser and the acceptance checks.
double weight_objective(std::span<const ProviderProfile> profiles,
                        const WeightVector& weights, double e_t);

/// Runs one strategy end to end. `profiles` must be aligned with `views`
/// (same providers, same order).
Estimate estimate_truth(Strategy strategy, std::span<const View> views,
                        std::span<const ProviderProfile> profiles, double e_t,
                        std::size_t k = kDefaultK);

}  // namespace idcs
