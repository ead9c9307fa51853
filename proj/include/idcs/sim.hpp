#pragma once

#include "idcs/dataset.hpp"
#include "idcs/payment.hpp"
#include "idcs/rng.hpp"
#include "idcs/truth.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace idcs {

/// A provider's error law for synthetic data: error ~ N(mean_error, stddev^2).
struct ProviderModel {
    ProviderId id;
    double mean_error = 0.0;
    double stddev = 0.0;
};

/// The twelve non-truth GDP sources with their reference mean error and
/// standard deviation of error against GDP_PA.
const std::vector<ProviderModel>& gdp_reference_providers();

enum class SignConvention {
    as_given,
    /// Each repetition flips every provider's mean error with probability 1/2;
    /// for tables that only report error magnitudes.
    random,
};

struct SyntheticMarket {
    std::vector<ProviderModel> providers;
    SignConvention signs = SignConvention::as_given;
    int first_year = 1995;
    std::size_t years = 20;
    double truth_mean = 9.5;    // growth rate, percent
    double truth_stddev = 2.0;
    std::string truth_column = "GDP_PA";
};

/// Reference providers with random mean-error signs.
SyntheticMarket gdp_synthetic_market();

/// Draws the truth series, then each provider column as truth + error.
/// Columns follow `market.providers` order with the truth column last.
SeriesTable synthesize_table(const SyntheticMarket& market, Rng& rng);

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::size_t malicious = 0;            // mp
    double manipulation = 1.0;            // mf, malicious views become mf * v
    double improvement_exponent = 0.1;    // if
    double improvement_coefficient = 0.1; // a
    std::size_t repetitions = 10;
    double budget = 1.0;                  // C
    std::vector<Strategy> methods = {Strategy::idcsw, Strategy::mean, Strategy::median,
                                     Strategy::k_voting, Strategy::k_sources};
    std::vector<PaymentKind> functions = {PaymentKind::top_one,
                                          PaymentKind::top_three_inverse_distance,
                                          PaymentKind::all_inverse_square};
    double error_threshold = kDefaultErrorThreshold;
    std::size_t k = kDefaultK;
    std::size_t calibration_trades = 10;
    /// Payment function whose payees improve between trajectory rounds.
    PaymentKind trajectory_function = PaymentKind::all_inverse_square;
    bool parallel = true;

    /// Throws Errc::invalid_config for `providers` providers.
    void validate(std::size_t providers) const;
};

/// Indices of the malicious providers: the first `mp` entries of a full
/// permutation of 0..m-1, so that larger mp under the same stream selects a
/// superset.
std::vector<std::size_t> choose_malicious(std::size_t m, std::size_t mp, Rng& rng);

std::vector<View> inject_malicious(std::span<const View> views, std::size_t mp, double mf, Rng& rng);

/// Deviation ratio after the (j+1)-th paid unit: clamp(1 - a e^{if (j+1)}, 0, 1).
double improvement_ratio(std::size_t j, double a, double if_exponent);

double improvement_step(double current, double ground_truth, std::size_t j, double a,
                        double if_exponent);

struct ErrorPaymentCell {
    Strategy method;
    PaymentKind function;
    std::vector<double> per_repetition;

    double mean() const;
};

struct RunResult {
    ExperimentConfig config;
    std::vector<ErrorPaymentCell> cells;
    /// Confidence level reported by each method, averaged over repetitions.
    std::vector<std::pair<Strategy, double>> mean_confidence;

    const ErrorPaymentCell& cell(Strategy method, PaymentKind function) const;
};

RunResult run_error_payment_grid(const ExperimentConfig& config, const SeriesTable& table,
                                 const std::string& truth_column);

/// Every repetition draws its own table from `market`.
RunResult run_error_payment_grid(const ExperimentConfig& config, const SyntheticMarket& market);

struct TrajectoryPoint {
    std::size_t round = 0;
    double cumulative_budget = 0.0;
    double confidence = 0.0;
};

using Trajectory = std::vector<TrajectoryPoint>;

Trajectory run_confidence_trajectory(const ExperimentConfig& config, const SeriesTable& table,
                                     const std::string& truth_column, std::size_t max_budget);

/// Table drawn from `market` with Rng(config.seed).
Trajectory run_confidence_trajectory(const ExperimentConfig& config, const SyntheticMarket& market,
                                     std::size_t max_budget);

/// Smallest cumulative budget whose confidence reaches `target`, if any.
std::optional<double> budget_to_reach(const Trajectory& trajectory, double target);

void write_error_payment_csv(std::ostream& out, std::span<const RunResult> runs);
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace idcs
