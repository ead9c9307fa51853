#pragma once

#include "idcs/truth.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace idcs {

/// How a budget is spread over the providers nearest the reference value.
///   top_one                     nearest provider takes everything
///   top_three_inverse_distance  three nearest, shares proportional to 1/d
///   all_inverse_square          every provider, shares proportional to 1/d^2
enum class PaymentKind { top_one, top_three_inverse_distance, all_inverse_square };

struct PaymentFunction {
    PaymentKind kind = PaymentKind::top_one;

    /// Number of payees when `m` providers responded.
    std::size_t payee_count(std::size_t m) const;
    friend bool operator==(const PaymentFunction&, const PaymentFunction&) = default;
};

std::string_view to_string(PaymentKind kind) noexcept;
std::optional<PaymentKind> parse_payment_kind(std::string_view name) noexcept;

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct PaymentBand {
    double upper_cl = kUnbounded;  // band covers (previous upper_cl, upper_cl]
    double budget = 0.0;
    PaymentFunction function;

    friend bool operator==(const PaymentBand&, const PaymentBand&) = default;
};

struct PaymentMode {
    std::vector<PaymentBand> bands;

    /// One unbounded band paying `budget`.
    static PaymentMode flat(double budget, PaymentKind kind);
    friend bool operator==(const PaymentMode&, const PaymentMode&) = default;
};

/// Throws Errc::invalid_mode unless thresholds strictly increase, the last
/// band is unbounded and every budget is finite and nonnegative.
void validate_mode(const PaymentMode& mode);

struct Allocation {
    ProviderId provider;
    double amount = 0.0;

    friend bool operator==(const Allocation&, const Allocation&) = default;
};

struct Settlement {
    std::vector<Allocation> allocations;

    double total() const;
    double amount_of(const ProviderId& id) const;  // zero when absent
    friend bool operator==(const Settlement&, const Settlement&) = default;
};

const PaymentBand& select_band(const PaymentMode& mode, double cl);

/// Allocations come back in the order of `views`, one entry per view.
/// Payees sharing distance zero split the budget equally.
Settlement distribute(PaymentFunction function, double budget, std::span<const View> views,
                      double truth);

/// Total absolute misallocation; providers missing from one side count as 0.
double error_payment(const Settlement& actual, const Settlement& ideal);

enum class Verdict { accept, reject };

/// Band thresholds must match; accepted iff no band budget decreases.
Verdict validate_redeclaration(const PaymentMode& old_mode, const PaymentMode& new_mode);

}  // namespace idcs
