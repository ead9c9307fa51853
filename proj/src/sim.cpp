#include "idcs/sim.hpp"

#include "idcs/error.hpp"
#include "idcs/ledger.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <thread>

namespace idcs {

const std::vector<ProviderModel>& gdp_reference_providers() {
    static const std::vector<ProviderModel> providers = {
        {{"FCE"}, 2.4069, 1.5291},   {{"GCF"}, 3.8193, 2.9389},    {{"NE"}, 33.6287, 34.5794},
        {{"GDP_EA"}, 1.2462, 0.9685}, {{"NPT"}, 3.9390, 3.4461},   {{"WC"}, 4.1153, 5.3371},
        {{"DFA"}, 3.6984, 2.3672},   {{"BB"}, 10.7253, 14.3010},   {{"GDP_IA"}, 3.0893, 3.6595},
        {{"FI"}, 4.8382, 3.2961},    {{"SI"}, 1.6570, 1.1663},     {{"TI"}, 2.6926, 1.9201},
    };
    return providers;
}

SyntheticMarket gdp_synthetic_market() {
    SyntheticMarket market;
    market.providers = gdp_reference_providers();
    market.signs = SignConvention::random;
    return market;
}

SeriesTable synthesize_table(const SyntheticMarket& market, Rng& rng) {
    SeriesTable t;
    for (std::size_t y = 0; y < market.years; ++y) {
        t.years.push_back(market.first_year + static_cast<int>(y));
    }
    std::vector<double> truth(market.years);
    for (auto& v : truth) {
        v = rng.normal(market.truth_mean, market.truth_stddev);
    }
    for (const auto& p : market.providers) {
        double mean = p.mean_error;
        if (market.signs == SignConvention::random && rng.uniform01() < 0.5) {
            mean = -mean;
        }
        SeriesColumn c{p.id.value, {}};
        for (std::size_t y = 0; y < market.years; ++y) {
            c.cells.emplace_back(truth[y] + rng.normal(mean, p.stddev));
        }
        t.columns.push_back(std::move(c));
    }
    SeriesColumn tc{market.truth_column, {}};
    for (double v : truth) {
        tc.cells.emplace_back(v);
    }
    t.columns.push_back(std::move(tc));
    return t;
}

void ExperimentConfig::validate(std::size_t providers) const {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, what); };
    if (malicious > providers) {
        fail("mp=" + std::to_string(malicious) + " exceeds the " + std::to_string(providers) +
             " providers");
    }
    if (!(manipulation > 0.0) || !std::isfinite(manipulation)) {
        fail("mf must be positive");
    }
    if (!(improvement_exponent > 0.0) || !std::isfinite(improvement_exponent)) {
        fail("if must be positive");
    }
    if (!(improvement_coefficient > 0.0) || !std::isfinite(improvement_coefficient)) {
        fail("a must be positive");
    }
    if (repetitions < 1) {
        fail("repetitions must be at least 1");
    }
    if (!(budget >= 0.0) || !std::isfinite(budget)) {
        fail("budget must be nonnegative");
    }
    if (methods.empty() || functions.empty()) {
        fail("at least one method and one payment function are required");
    }
    if (!(error_threshold > 0.0)) {
        fail("error threshold must be positive");
    }
    if (calibration_trades < 1) {
        fail("at least one calibration trade is required");
    }
    const bool needs_k = std::any_of(methods.begin(), methods.end(), [](Strategy s) {
        return s == Strategy::k_voting || s == Strategy::k_sources;
    });
    if (needs_k && (k < 1 || k > providers)) {
        fail("k=" + std::to_string(k) + " is outside [1, " + std::to_string(providers) + "]");
    }
}

std::vector<std::size_t> choose_malicious(std::size_t m, std::size_t mp, Rng& rng) {
    if (mp > m) {
        throw Error(Errc::invalid_parameter, "mp exceeds the number of providers");
    }
    auto perm = rng.permutation(m);
    perm.resize(mp);
    return perm;
}

std::vector<View> inject_malicious(std::span<const View> views, std::size_t mp, double mf, Rng& rng) {
    const auto chosen = choose_malicious(views.size(), mp, rng);
    std::vector<View> out(views.begin(), views.end());
    for (auto i : chosen) {
        out[i].value *= mf;
    }
    return out;
}

double improvement_ratio(std::size_t j, double a, double if_exponent) {
    const double r = 1.0 - a * std::exp(if_exponent * static_cast<double>(j + 1));
    return std::clamp(r, 0.0, 1.0);
}

double improvement_step(double current, double ground_truth, std::size_t j, double a,
                        double if_exponent) {
    return ground_truth + improvement_ratio(j, a, if_exponent) * (current - ground_truth);
}

double ErrorPaymentCell::mean() const {
    if (per_repetition.empty()) {
        return 0.0;
    }
    return std::accumulate(per_repetition.begin(), per_repetition.end(), 0.0) /
           static_cast<double>(per_repetition.size());
}

const ErrorPaymentCell& RunResult::cell(Strategy method, PaymentKind function) const {
    for (const auto& c : cells) {
        if (c.method == method && c.function == function) {
            return c;
        }
    }
    throw Error(Errc::invalid_parameter, "no such cell in run result");
}

namespace {

// Provider columns, truth series and dimensions of a filled table.
struct Market {
    std::vector<ProviderId> providers;
    std::vector<std::vector<double>> columns;  // [provider][year]
    std::vector<double> truth;
};

Market prepare(const SeriesTable& raw, const std::string& truth_column) {
    const auto table = raw.missing_count() > 0 ? fill_forward(raw) : raw;
    const auto* tc = table.column(truth_column);
    if (tc == nullptr) {
        throw Error(Errc::missing_column, "ground-truth column " + truth_column + " not found");
    }
    Market m;
    for (const auto& cell : tc->cells) {
        m.truth.push_back(*cell);
    }
    for (const auto& c : table.columns) {
        if (c.name == truth_column) {
            continue;
        }
        m.providers.push_back(ProviderId{c.name});
        std::vector<double> values;
        for (const auto& cell : c.cells) {
            values.push_back(*cell);
        }
        m.columns.push_back(std::move(values));
    }
    if (m.providers.empty() || m.truth.empty()) {
        throw Error(Errc::invalid_config, "dataset needs at least one provider column and one year");
    }
    return m;
}

double column_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

LedgerOptions ledger_options(const ExperimentConfig& config) {
    LedgerOptions o;
    o.error_threshold = config.error_threshold;
    o.min_calibration_trades = config.calibration_trades;
    o.k = config.k;
    o.clock = logical_clock();
    return o;
}

std::vector<std::size_t> choose_calibration_years(std::size_t years, std::size_t trades, Rng& rng) {
    if (trades > years) {
        throw Error(Errc::invalid_config, "calibration needs " + std::to_string(trades) +
                                              " years, dataset has " + std::to_string(years));
    }
    auto perm = rng.permutation(years);
    perm.resize(trades);
    return perm;
}

Ledger calibrated_ledger(const ExperimentConfig& config, const Market& market,
                         const std::vector<std::vector<double>>& columns,
                         const std::vector<std::size_t>& years) {
    Ledger ledger(ledger_options(config));
    for (std::size_t i = 0; i < market.providers.size(); ++i) {
        std::vector<CalibrationPair> pairs;
        for (auto y : years) {
            pairs.push_back({market.truth[y], columns[i][y]});
        }
        ledger.calibrate(market.providers[i], pairs);
    }
    return ledger;
}

struct RepetitionOutcome {
    std::vector<double> error_payment;  // methods x functions, row-major
    std::vector<double> confidence;     // per method
};

RepetitionOutcome run_repetition(const ExperimentConfig& config, const Market& market, Rng& rng) {
    const std::size_t m = market.providers.size();
    const auto cal_years = choose_calibration_years(market.truth.size(), config.calibration_trades, rng);
    const auto malicious = choose_malicious(m, config.malicious, rng);

    // Byzantine providers manipulate everything they supply.
    auto columns = market.columns;
    for (auto i : malicious) {
        for (auto& v : columns[i]) {
            v *= config.manipulation;
        }
    }
    const Ledger base = calibrated_ledger(config, market, columns, cal_years);

    std::vector<View> views;
    for (std::size_t i = 0; i < m; ++i) {
        views.push_back({market.providers[i], column_mean(columns[i])});
    }
    const double ground_truth = column_mean(market.truth);

    RepetitionOutcome out;
    for (auto method : config.methods) {
        Ledger ledger = base;
        std::vector<TradeId> trades;
        for (auto fn : config.functions) {
            const auto id = ledger.declare(PaymentMode::flat(config.budget, fn), "commodity");
            for (const auto& v : views) {
                ledger.submit_view(id, v.provider, v.value);
            }
            trades.push_back(id);
        }
        double cl = 0.0;
        for (auto id : trades) {
            cl = ledger.evaluate(id, method);
        }
        out.confidence.push_back(cl);
        for (std::size_t f = 0; f < trades.size(); ++f) {
            const auto actual = ledger.confirm(trades[f]).settlement;
            const auto ideal = distribute(PaymentFunction{config.functions[f]}, config.budget, views,
                                          ground_truth);
            out.error_payment.push_back(error_payment(actual, ideal));
        }
    }
    return out;
}

template <typename Body>
std::vector<RepetitionOutcome> for_each_repetition(const ExperimentConfig& config, Body body) {
    std::vector<RepetitionOutcome> results(config.repetitions);
    auto one = [&](std::size_t r) {
        Rng rng(config.seed + r);
        results[r] = body(rng);
    };
    const std::size_t workers =
        config.parallel ? std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                                                config.repetitions)
                        : 1;
    if (workers <= 1) {
        for (std::size_t r = 0; r < config.repetitions; ++r) {
            one(r);
        }
        return results;
    }
    // Static striping; each repetition owns its generator and ledger.
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t r = w; r < config.repetitions; r += workers) {
                    one(r);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

RunResult collect(const ExperimentConfig& config, const std::vector<RepetitionOutcome>& reps) {
    RunResult result;
    result.config = config;
    const std::size_t nf = config.functions.size();
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        for (std::size_t f = 0; f < nf; ++f) {
            ErrorPaymentCell cell{config.methods[mi], config.functions[f], {}};
            for (const auto& r : reps) {
                cell.per_repetition.push_back(r.error_payment[mi * nf + f]);
            }
            result.cells.push_back(std::move(cell));
        }
        double cl = 0.0;
        for (const auto& r : reps) {
            cl += r.confidence[mi];
        }
        result.mean_confidence.emplace_back(config.methods[mi], cl / static_cast<double>(reps.size()));
    }
    return result;
}

Trajectory trajectory_on(const ExperimentConfig& config, const Market& market, Rng& rng,
                         std::size_t max_budget) {
    const std::size_t m = market.providers.size();
    const std::size_t n = market.truth.size();
    const auto cal_years = choose_calibration_years(n, config.calibration_trades, rng);
    const auto malicious = choose_malicious(m, config.malicious, rng);
    auto raw = market.columns;
    for (auto i : malicious) {
        for (auto& v : raw[i]) {
            v *= config.manipulation;
        }
    }
    const double ground_truth = column_mean(market.truth);

    // Cumulative deviation ratio and paid-unit count per provider.
    std::vector<double> ratio(m, 1.0);
    std::vector<std::size_t> paid(m, 0);

    Trajectory out;
    for (std::size_t round = 0; round <= max_budget; ++round) {
        auto current = raw;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t y = 0; y < n; ++y) {
                current[i][y] = market.truth[y] + ratio[i] * (raw[i][y] - market.truth[y]);
            }
        }
        // Improved providers are re-assessed on the known-truth trades.
        Ledger ledger = calibrated_ledger(config, market, current, cal_years);
        const auto id = ledger.declare(PaymentMode::flat(config.budget, config.trajectory_function),
                                       "commodity");
        for (std::size_t i = 0; i < m; ++i) {
            // Commodity view of provider i relative to the truth of the commodity.
            const double view = ground_truth + ratio[i] * (column_mean(raw[i]) - ground_truth);
            ledger.submit_view(id, market.providers[i], view);
        }
        const double cl = ledger.evaluate(id, Strategy::idcsw);
        out.push_back({round, static_cast<double>(round) * config.budget, cl});
        if (round == max_budget) {
            break;
        }
        const auto settlement = ledger.confirm(id).settlement;
        for (std::size_t i = 0; i < m; ++i) {
            if (settlement.allocations[i].amount > 0.0) {
                ratio[i] *= improvement_ratio(paid[i], config.improvement_coefficient,
                                              config.improvement_exponent);
                ++paid[i];
            }
        }
    }
    return out;
}

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string fixed9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return buf;
}

}  // namespace

RunResult run_error_payment_grid(const ExperimentConfig& config, const SeriesTable& table,
                                 const std::string& truth_column) {
    const auto market = prepare(table, truth_column);
    config.validate(market.providers.size());
    const auto reps = for_each_repetition(
        config, [&](Rng& rng) { return run_repetition(config, market, rng); });
    return collect(config, reps);
}

RunResult run_error_payment_grid(const ExperimentConfig& config, const SyntheticMarket& synthetic) {
    config.validate(synthetic.providers.size());
    const auto reps = for_each_repetition(config, [&](Rng& rng) {
        const auto market = prepare(synthesize_table(synthetic, rng), synthetic.truth_column);
        return run_repetition(config, market, rng);
    });
    return collect(config, reps);
}

Trajectory run_confidence_trajectory(const ExperimentConfig& config, const SeriesTable& table,
                                     const std::string& truth_column, std::size_t max_budget) {
    const auto market = prepare(table, truth_column);
    config.validate(market.providers.size());
    Rng rng(config.seed);
    return trajectory_on(config, market, rng, max_budget);
}

Trajectory run_confidence_trajectory(const ExperimentConfig& config, const SyntheticMarket& synthetic,
                                     std::size_t max_budget) {
    config.validate(synthetic.providers.size());
    Rng rng(config.seed);
    const auto market = prepare(synthesize_table(synthetic, rng), synthetic.truth_column);
    return trajectory_on(config, market, rng, max_budget);
}

std::optional<double> budget_to_reach(const Trajectory& trajectory, double target) {
    for (const auto& p : trajectory) {
        if (p.confidence >= target) {
            return p.cumulative_budget;
        }
    }
    return std::nullopt;
}

void write_error_payment_csv(std::ostream& out, std::span<const RunResult> runs) {
    out << "method,function,mp,mf,if,repetition,error_payment\n";
    for (const auto& run : runs) {
        for (const auto& cell : run.cells) {
            for (std::size_t r = 0; r < cell.per_repetition.size(); ++r) {
                out << to_string(cell.method) << ',' << to_string(cell.function) << ','
                    << run.config.malicious << ',' << shortest(run.config.manipulation) << ','
                    << shortest(run.config.improvement_exponent) << ',' << r << ','
                    << fixed9(cell.per_repetition[r]) << '\n';
            }
        }
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "round,cumulative_budget,cl\n";
    for (const auto& p : trajectory) {
        out << p.round << ',' << shortest(p.cumulative_budget) << ',' << fixed9(p.confidence) << '\n';
    }
}

}  // namespace idcs
