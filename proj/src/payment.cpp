#include "idcs/payment.hpp"

#include "idcs/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace idcs {

std::size_t PaymentFunction::payee_count(std::size_t m) const {
    switch (kind) {
        case PaymentKind::top_one: return std::min<std::size_t>(1, m);
        case PaymentKind::top_three_inverse_distance: return std::min<std::size_t>(3, m);
        case PaymentKind::all_inverse_square: return m;
    }
    return m;
}

std::string_view to_string(PaymentKind kind) noexcept {
    switch (kind) {
        case PaymentKind::top_one: return "TopOne";
        case PaymentKind::top_three_inverse_distance: return "TopThreeInverseDistance";
        case PaymentKind::all_inverse_square: return "AllInverseSquare";
    }
    return "unknown";
}

std::optional<PaymentKind> parse_payment_kind(std::string_view name) noexcept {
    for (auto k : {PaymentKind::top_one, PaymentKind::top_three_inverse_distance,
                   PaymentKind::all_inverse_square}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    if (name == "top1" || name == "(1,1)") return PaymentKind::top_one;
    if (name == "top3" || name == "(3,1/d)") return PaymentKind::top_three_inverse_distance;
    if (name == "all" || name == "(m,1/d^2)") return PaymentKind::all_inverse_square;
    return std::nullopt;
}

PaymentMode PaymentMode::flat(double budget, PaymentKind kind) {
    return PaymentMode{{PaymentBand{kUnbounded, budget, PaymentFunction{kind}}}};
}

void validate_mode(const PaymentMode& mode) {
    if (mode.bands.empty()) {
        throw Error(Errc::invalid_mode, "payment mode has no bands");
    }
    double prev = -kUnbounded;
    for (std::size_t i = 0; i < mode.bands.size(); ++i) {
        const auto& b = mode.bands[i];
        if (std::isnan(b.upper_cl) || !(b.upper_cl > prev)) {
            throw Error(Errc::invalid_mode,
                        "band thresholds must be strictly increasing (band " + std::to_string(i) + ")");
        }
        if (!std::isfinite(b.budget) || b.budget < 0.0) {
            throw Error(Errc::invalid_mode, "band budget must be finite and nonnegative (band " +
                                                std::to_string(i) + ")");
        }
        prev = b.upper_cl;
    }
    if (mode.bands.back().upper_cl != kUnbounded) {
        throw Error(Errc::invalid_mode, "last band must be unbounded");
    }
}

double Settlement::total() const {
    double t = 0.0;
    for (const auto& a : allocations) {
        t += a.amount;
    }
    return t;
}

double Settlement::amount_of(const ProviderId& id) const {
    for (const auto& a : allocations) {
        if (a.provider == id) {
            return a.amount;
        }
    }
    return 0.0;
}

const PaymentBand& select_band(const PaymentMode& mode, double cl) {
    for (const auto& b : mode.bands) {
        if (cl <= b.upper_cl) {
            return b;
        }
    }
    return mode.bands.back();
}

Settlement distribute(PaymentFunction function, double budget, std::span<const View> views,
                      double truth) {
    if (!(budget >= 0.0) || !std::isfinite(budget)) {
        throw Error(Errc::invalid_parameter, "budget must be finite and nonnegative");
    }
    if (views.empty()) {
        throw Error(Errc::invalid_input, "no views to pay");
    }
    const std::size_t m = views.size();
    std::vector<double> d(m);
    for (std::size_t i = 0; i < m; ++i) {
        d[i] = std::abs(views[i].value - truth);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (d[a] != d[b]) {
            return d[a] < d[b];
        }
        return views[a].provider < views[b].provider;
    });

    std::vector<std::size_t> payees(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(function.payee_count(m)));
    if (function.kind == PaymentKind::top_one) {
        // Everyone tied at the minimum distance shares the budget.
        for (std::size_t r = 1; r < m && d[order[r]] == d[order[0]]; ++r) {
            payees.push_back(order[r]);
        }
    }

    Settlement s;
    s.allocations.reserve(m);
    for (const auto& v : views) {
        s.allocations.push_back({v.provider, 0.0});
    }
    if (budget == 0.0) {
        return s;
    }

    std::vector<double> share(payees.size(), 0.0);
    const double dmin = d[payees.front()];
    if (dmin == 0.0 || function.kind == PaymentKind::top_one) {
        for (std::size_t r = 0; r < payees.size(); ++r) {
            share[r] = d[payees[r]] == dmin ? 1.0 : 0.0;
        }
    } else {
        const double power = function.kind == PaymentKind::all_inverse_square ? 2.0 : 1.0;
        // (dmin / d)^p keeps every term in (0, 1] however small dmin is.
        for (std::size_t r = 0; r < payees.size(); ++r) {
            share[r] = std::pow(dmin / d[payees[r]], power);
        }
    }
    const double norm = std::accumulate(share.begin(), share.end(), 0.0);
    for (std::size_t r = 0; r < payees.size(); ++r) {
        s.allocations[payees[r]].amount = budget * share[r] / norm;
    }
    return s;
}

double error_payment(const Settlement& actual, const Settlement& ideal) {
    std::map<ProviderId, double> diff;
    for (const auto& a : actual.allocations) {
        diff[a.provider] += a.amount;
    }
    for (const auto& a : ideal.allocations) {
        diff[a.provider] -= a.amount;
    }
    double total = 0.0;
    for (const auto& [id, delta] : diff) {
        total += std::abs(delta);
    }
    return total;
}

Verdict validate_redeclaration(const PaymentMode& old_mode, const PaymentMode& new_mode) {
    validate_mode(old_mode);
    validate_mode(new_mode);
    if (old_mode.bands.size() != new_mode.bands.size()) {
        throw Error(Errc::invalid_redeclaration, "redeclared mode has a different band count");
    }
    for (std::size_t i = 0; i < old_mode.bands.size(); ++i) {
        if (old_mode.bands[i].upper_cl != new_mode.bands[i].upper_cl) {
            throw Error(Errc::invalid_redeclaration,
                        "redeclared mode changes the threshold of band " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < old_mode.bands.size(); ++i) {
        if (new_mode.bands[i].budget < old_mode.bands[i].budget) {
            return Verdict::reject;
        }
    }
    return Verdict::accept;
}

}  // namespace idcs
