#include "idcs/truth.hpp"

#include "idcs/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace idcs {

double WeightVector::sum() const {
    double total = 0.0;
    for (const auto& e : entries) {
        total += e.weight;
    }
    return total;
}

std::optional<double> WeightVector::weight_of(const ProviderId& id) const {
    for (const auto& e : entries) {
        if (e.provider == id) {
            return e.weight;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::idcsw: return "IDCSW";
        case Strategy::mean: return "Mean";
        case Strategy::median: return "Median";
        case Strategy::k_voting: return "KVoting";
        case Strategy::k_sources: return "KSources";
    }
    return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
    for (auto s : {Strategy::idcsw, Strategy::mean, Strategy::median, Strategy::k_voting,
                   Strategy::k_sources}) {
        if (name == to_string(s)) {
            return s;
        }
    }
    if (name == "idcsw") return Strategy::idcsw;
    if (name == "mean") return Strategy::mean;
    if (name == "median") return Strategy::median;
    if (name == "kvoting" || name == "k-voting" || name == "3-voting") return Strategy::k_voting;
    if (name == "ksources" || name == "k-sources" || name == "3-sources") return Strategy::k_sources;
    return std::nullopt;
}

namespace {

void require_views(std::span<const View> views) {
    if (views.empty()) {
        throw Error(Errc::invalid_input, "no views");
    }
}

void require_k(std::size_t k, std::size_t m) {
    if (k == 0 || k > m) {
        throw Error(Errc::invalid_parameter,
                    "k must be in [1, " + std::to_string(m) + "], got " + std::to_string(k));
    }
}

void require_calibrated(std::span<const ProviderProfile> profiles) {
    if (profiles.empty()) {
        throw Error(Errc::invalid_input, "no profiles");
    }
    for (const auto& p : profiles) {
        if (!p.calibrated) {
            throw Error(Errc::not_calibrated, "provider " + p.provider.value + " is not calibrated");
        }
    }
}

GaussianParams weight_source(const ProviderProfile& p) {
    auto g = p.error_dist();
    g.variance = std::max(g.variance, kVarianceFloor);
    return g;
}

// Indices ordered by `key` ascending, ties by provider id ascending.
template <typename Key, typename IdOf>
std::vector<std::size_t> ranked(std::size_t n, Key key, IdOf id_of) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = key(a);
        const double kb = key(b);
        if (ka != kb) {
            return ka < kb;
        }
        return id_of(a) < id_of(b);
    });
    return order;
}

WeightVector selection(std::span<const View> views, std::span<const std::size_t> chosen) {
    WeightVector w;
    w.entries.reserve(views.size());
    for (const auto& v : views) {
        w.entries.push_back({v.provider, 0.0});
    }
    const double share = 1.0 / static_cast<double>(chosen.size());
    for (auto i : chosen) {
        w.entries[i].weight = share;
    }
    return w;
}

}  // namespace

double weighted_truth(std::span<const View> views, const WeightVector& weights) {
    require_views(views);
    if (weights.entries.size() != views.size()) {
        throw Error(Errc::invalid_input, "weights do not cover the submitted views");
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& v : views) {
        const auto w = weights.weight_of(v.provider);
        if (!w) {
            throw Error(Errc::invalid_input, "no weight for provider " + v.provider.value);
        }
        num += *w * v.value;
        den += *w;
    }
    if (!(den > 0.0)) {
        throw Error(Errc::invalid_input, "weights sum to zero");
    }
    return num / den;
}

WeightVector idcsw_weights(std::span<const ProviderProfile> profiles, double e_t) {
    require_calibrated(profiles);
    WeightVector w;
    w.entries.reserve(profiles.size());
    double total = 0.0;
    for (const auto& p : profiles) {
        const double prob = interval_prob(weight_source(p), e_t);
        w.entries.push_back({p.provider, prob});
        total += prob;
    }
    if (total > 0.0) {
        for (auto& e : w.entries) {
            e.weight /= total;
        }
    } else {
        // Every provider is (numerically) certain to miss the interval.
        for (auto& e : w.entries) {
            e.weight = 1.0 / static_cast<double>(w.entries.size());
        }
    }
    return w;
}

GaussianParams composed_error(std::span<const ProviderProfile> profiles,
                              const WeightVector& weights) {
    if (profiles.empty() || profiles.size() != weights.entries.size()) {
        throw Error(Errc::invalid_input, "profiles and weights cover different providers");
    }
    double wsum = 0.0;
    double mean = 0.0;
    double var = 0.0;
    for (const auto& p : profiles) {
        const auto w = weights.weight_of(p.provider);
        if (!w) {
            throw Error(Errc::invalid_input, "no weight for provider " + p.provider.value);
        }
        const auto g = p.error_dist();
        wsum += *w;
        mean += *w * g.mean;
        var += *w * *w * g.variance;
    }
    if (!(wsum > 0.0)) {
        throw Error(Errc::invalid_input, "weights sum to zero");
    }
    return {mean / wsum, var / (wsum * wsum)};
}

double confidence_level(const GaussianParams& error_dist, double e_t) {
    return interval_prob(error_dist, e_t);
}

WeightVector mean_weights(std::span<const View> views) {
    require_views(views);
    std::vector<std::size_t> all(views.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return selection(views, all);
}

WeightVector median_weights(std::span<const View> views) {
    require_views(views);
    const auto order = ranked(
        views.size(), [&](std::size_t i) { return views[i].value; },
        [&](std::size_t i) -> const ProviderId& { return views[i].provider; });
    const std::size_t m = views.size();
    if (m % 2 == 1) {
        const std::size_t mid[] = {order[m / 2]};
        return selection(views, mid);
    }
    const std::size_t mid[] = {order[m / 2 - 1], order[m / 2]};
    return selection(views, mid);
}

WeightVector k_voting_weights(std::span<const View> views, std::size_t k) {
    require_views(views);
    require_k(k, views.size());
    std::vector<double> votes(views.size(), 0.0);
    for (std::size_t i = 0; i < views.size(); ++i) {
        for (std::size_t j = 0; j < views.size(); ++j) {
            votes[i] += std::abs(views[i].value - views[j].value);
        }
    }
    const auto order = ranked(
        views.size(), [&](std::size_t i) { return votes[i]; },
        [&](std::size_t i) -> const ProviderId& { return views[i].provider; });
    return selection(views, std::span(order).first(k));
}

WeightVector k_sources_weights(std::span<const ProviderProfile> profiles, std::size_t k,
                               double e_t) {
    require_calibrated(profiles);
    require_k(k, profiles.size());
    std::vector<double> trust(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        trust[i] = interval_prob(weight_source(profiles[i]), e_t);
    }
    const auto order = ranked(
        profiles.size(), [&](std::size_t i) { return -trust[i]; },
        [&](std::size_t i) -> const ProviderId& { return profiles[i].provider; });
    WeightVector w;
    for (const auto& p : profiles) {
        w.entries.push_back({p.provider, 0.0});
    }
    for (std::size_t r = 0; r < k; ++r) {
        w.entries[order[r]].weight = 1.0 / static_cast<double>(k);
    }
    return w;
}

double weight_objective(std::span<const ProviderProfile> profiles, const WeightVector& weights,
                        double e_t) {
    return interval_prob(composed_error(profiles, weights), e_t);
}

WeightVector grid_optimal_weights(std::span<const ProviderProfile> profiles, double e_t,
                                  double step) {
    if (profiles.empty()) {
        throw Error(Errc::invalid_input, "no profiles");
    }
    if (profiles.size() > 4) {
        throw Error(Errc::unsupported_size, "grid search supports at most 4 providers, got " +
                                                std::to_string(profiles.size()));
    }
    if (!(step > 0.0) || step > 1.0) {
        throw Error(Errc::invalid_parameter, "step must lie in (0, 1]");
    }
    const double inv = 1.0 / step;
    const auto ticks = static_cast<int>(std::lround(inv));
    if (ticks > 1000 || std::abs(inv - ticks) > 1e-9 * inv) {
        throw Error(Errc::invalid_parameter, "step must divide 1 evenly");
    }
    const std::size_t m = profiles.size();
    // Precomputed per-provider moments; the inner loop avoids WeightVector churn.
    std::vector<GaussianParams> g(m);
    for (std::size_t i = 0; i < m; ++i) {
        g[i] = profiles[i].error_dist();
    }
    std::vector<int> cur(m, 0);
    std::vector<int> best;
    double best_obj = -1.0;
    auto visit = [&]() {
        double mean = 0.0;
        double var = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double w = cur[i] / static_cast<double>(ticks);
            mean += w * g[i].mean;
            var += w * w * g[i].variance;
        }
        const double obj = interval_prob({mean, var}, e_t);
        if (obj > best_obj) {
            best_obj = obj;
            best = cur;
        }
    };
    // Enumerate compositions of `ticks` into m nonnegative parts.
    auto recurse = [&](auto&& self, std::size_t idx, int remaining) -> void {
        if (idx + 1 == m) {
            cur[idx] = remaining;
            visit();
            return;
        }
        for (int t = 0; t <= remaining; ++t) {
            cur[idx] = t;
            self(self, idx + 1, remaining - t);
        }
    };
    recurse(recurse, 0, ticks);

    WeightVector w;
    for (std::size_t i = 0; i < m; ++i) {
        w.entries.push_back({profiles[i].provider, best[i] / static_cast<double>(ticks)});
    }
    return w;
}

Estimate estimate_truth(Strategy strategy, std::span<const View> views,
                        std::span<const ProviderProfile> profiles, double e_t, std::size_t k) {
    require_views(views);
    if (profiles.size() != views.size()) {
        throw Error(Errc::invalid_input, "profiles must align with views");
    }
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (profiles[i].provider != views[i].provider) {
            throw Error(Errc::invalid_input, "profiles must align with views");
        }
    }
    WeightVector weights;
    switch (strategy) {
        case Strategy::idcsw: weights = idcsw_weights(profiles, e_t); break;
        case Strategy::mean: weights = mean_weights(views); break;
        case Strategy::median: weights = median_weights(views); break;
        case Strategy::k_voting: weights = k_voting_weights(views, k); break;
        case Strategy::k_sources: weights = k_sources_weights(profiles, k, e_t); break;
    }
    Estimate est;
    est.truth = weighted_truth(views, weights);
    est.error_dist = composed_error(profiles, weights);
    est.confidence = confidence_level(est.error_dist, e_t);
    est.weights = std::move(weights);
    return est;
}

}  // namespace idcs
