#include "cli.hpp"

#include "idcs/dataset.hpp"
#include "idcs/error.hpp"
#include "idcs/ledger.hpp"
#include "idcs/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace idcs::cli {

namespace {

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(Errc::invalid_config, "cannot write " + path);
    }
    return out;
}

std::vector<std::string> provider_columns(const SeriesTable& table, const std::string& truth) {
    std::vector<std::string> out;
    for (const auto& c : table.columns) {
        if (c.name != truth) {
            out.push_back(c.name);
        }
    }
    return out;
}

SeriesTable load_filled(const std::string& path, const std::string& truth) {
    auto table = fill_forward(load_csv(path));
    if (table.column(truth) == nullptr) {
        throw Error(Errc::missing_column, "ground-truth column '" + truth + "' not found in " + path);
    }
    return table;
}

Ledger calibrate_from_table(const SeriesTable& table, const std::string& truth, std::size_t trades,
                            std::uint64_t seed, LedgerOptions options) {
    if (trades > table.years.size()) {
        throw Error(Errc::invalid_config, "--trades " + std::to_string(trades) + " exceeds the " +
                                              std::to_string(table.years.size()) + " years in the dataset");
    }
    Rng rng(seed);
    auto years = rng.permutation(table.years.size());
    years.resize(trades);
    Ledger ledger(std::move(options));
    const auto* tc = table.column(truth);
    for (const auto& name : provider_columns(table, truth)) {
        const auto* c = table.column(name);
        std::vector<CalibrationPair> pairs;
        for (auto y : years) {
            pairs.push_back({*tc->cells[y], *c->cells[y]});
        }
        ledger.calibrate(ProviderId{name}, pairs);
    }
    return ledger;
}

struct CalibrateArgs {
    std::string dataset;
    std::string truth;
    std::size_t trades = 10;
    std::string profiles;
};

int cmd_calibrate(const CalibrateArgs& a, std::uint64_t seed, std::ostream& out) {
    const auto table = load_filled(a.dataset, a.truth);
    LedgerOptions options;
    options.min_calibration_trades = a.trades;
    options.clock = logical_clock();
    const auto ledger = calibrate_from_table(table, a.truth, a.trades, seed, options);
    {
        auto file = open_out(a.profiles);
        ledger.write_profiles_csv(file);
    }
    out << "provider     mu         sigma      trades\n";
    for (const auto& p : ledger.profiles()) {
        const auto g = p.error_dist();
        out << std::left << std::setw(12) << p.provider.value << ' ' << std::setw(10) << fmt(g.mean)
            << ' ' << std::setw(10) << fmt(g.stddev()) << ' ' << p.error_moments.count << '\n';
    }
    out << ledger.profiles().size() << " profiles written to " << a.profiles << '\n';
    return kExitOk;
}

struct ExperimentArgs {
    std::string profiles;
    std::vector<std::size_t> mp = {3, 6, 9, 12};
    std::vector<double> mf = {1.2};
    std::uint64_t seed = 0;
    std::string out;
    std::vector<std::string> methods;
    std::vector<std::string> functions;
};

std::vector<Strategy> parse_methods(const std::vector<std::string>& names) {
    std::vector<Strategy> out;
    for (const auto& n : names) {
        const auto s = parse_strategy(n);
        if (!s) {
            throw Error(Errc::invalid_config, "unknown method '" + n + "'");
        }
        out.push_back(*s);
    }
    return out;
}

std::vector<PaymentKind> parse_functions(const std::vector<std::string>& names) {
    std::vector<PaymentKind> out;
    for (const auto& n : names) {
        const auto k = parse_payment_kind(n);
        if (!k) {
            throw Error(Errc::invalid_config, "unknown payment function '" + n + "'");
        }
        out.push_back(*k);
    }
    return out;
}

SyntheticMarket market_from_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, "cannot open " + path);
    }
    const auto profiles = read_profiles_csv(in);
    if (profiles.empty()) {
        throw Error(Errc::invalid_config, "profile store " + path + " has no providers");
    }
    SyntheticMarket market;
    for (const auto& p : profiles) {
        if (!p.calibrated) {
            throw Error(Errc::not_calibrated, "provider " + p.provider.value + " is not calibrated");
        }
        const auto g = p.error_dist();
        market.providers.push_back({p.provider, g.mean, g.stddev()});
    }
    return market;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
    const auto market = market_from_profiles(a.profiles);
    ExperimentConfig base;
    base.seed = a.seed;
    if (!a.methods.empty()) {
        base.methods = parse_methods(a.methods);
    }
    if (!a.functions.empty()) {
        base.functions = parse_functions(a.functions);
    }
    // Validate the whole grid before running any of it.
    std::vector<ExperimentConfig> grid;
    for (auto mp : a.mp) {
        for (auto mf : a.mf) {
            auto c = base;
            c.malicious = mp;
            c.manipulation = mf;
            c.validate(market.providers.size());
            grid.push_back(c);
        }
    }
    std::vector<RunResult> runs;
    for (const auto& c : grid) {
        runs.push_back(run_error_payment_grid(c, market));
    }
    {
        auto file = open_out(a.out);
        write_error_payment_csv(file, runs);
    }
    for (const auto& run : runs) {
        out << "mp=" << run.config.malicious << " mf=" << run.config.manipulation
            << " repetitions=" << run.config.repetitions << '\n';
        out << std::left << std::setw(10) << "method";
        for (auto f : run.config.functions) {
            out << ' ' << std::setw(24) << to_string(f);
        }
        out << '\n';
        for (auto m : run.config.methods) {
            out << std::left << std::setw(10) << to_string(m);
            for (auto f : run.config.functions) {
                out << ' ' << std::setw(24) << fmt(run.cell(m, f).mean());
            }
            out << '\n';
        }
    }
    return kExitOk;
}

struct TrajectoryArgs {
    std::vector<double> if_values = {0.1, 0.2, 0.3, 0.4};
    std::size_t mp = 3;
    std::size_t budget = 30;
    std::uint64_t seed = 0;
    std::string out;
};

std::string trajectory_path(const std::string& out, double if_value, bool several) {
    if (!several) {
        return out;
    }
    std::filesystem::path p(out);
    char tag[32];
    std::snprintf(tag, sizeof tag, "_if%g", if_value);
    return (p.parent_path() / (p.stem().string() + tag + p.extension().string())).string();
}

int cmd_trajectory(const TrajectoryArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<double> ifs;
    for (double v : a.if_values) {
        if (std::find(ifs.begin(), ifs.end(), v) != ifs.end()) {
            err << "warning: duplicate --if value " << v << " ignored\n";
            continue;
        }
        ifs.push_back(v);
    }
    const auto market = gdp_synthetic_market();
    std::vector<ExperimentConfig> configs;
    for (double v : ifs) {
        ExperimentConfig c;
        c.seed = a.seed;
        c.malicious = a.mp;
        c.manipulation = 1.6;
        c.improvement_exponent = v;
        c.validate(market.providers.size());
        configs.push_back(c);
    }
    for (const auto& c : configs) {
        const auto t = run_confidence_trajectory(c, market, a.budget);
        const auto path = trajectory_path(a.out, c.improvement_exponent, configs.size() > 1);
        {
            auto file = open_out(path);
            write_trajectory_csv(file, t);
        }
        out << "if=" << c.improvement_exponent << " mp=" << c.malicious << " cl: " << fmt(t.front().confidence)
            << " -> " << fmt(t.back().confidence) << " over " << t.back().cumulative_budget
            << " units (" << path << ")\n";
    }
    return kExitOk;
}

struct TradeArgs {
    std::string dataset;
    std::string truth;
    std::size_t trades = 10;
    std::string mode = "inf:1:TopOne";
    std::string strategy = "IDCSW";
    double accept_cl = 0.0;
    std::size_t max_rounds = 0;
    double raise = 1.0;
    std::string log;
    std::uint64_t seed = 0;
};

int cmd_trade(const TradeArgs& a, std::ostream& out) {
    const auto table = load_filled(a.dataset, a.truth);
    const auto strategy = parse_strategy(a.strategy);
    if (!strategy) {
        throw Error(Errc::invalid_config, "unknown strategy '" + a.strategy + "'");
    }
    auto mode = parse_mode(a.mode);
    LedgerOptions options;
    options.min_calibration_trades = a.trades;
    options.clock = logical_clock();
    auto ledger = calibrate_from_table(table, a.truth, a.trades, a.seed, options);

    // Commodity: each source's average over the whole period.
    std::vector<View> views;
    for (const auto& name : provider_columns(table, a.truth)) {
        const auto* c = table.column(name);
        double sum = 0.0;
        for (const auto& cell : c->cells) {
            sum += *cell;
        }
        views.push_back({ProviderId{name}, sum / static_cast<double>(c->cells.size())});
    }

    const auto id = ledger.declare(mode, "average-growth-rate");
    double cl = 0.0;
    for (std::size_t round = 0;; ++round) {
        for (const auto& v : views) {
            ledger.submit_view(id, v.provider, v.value);
        }
        cl = ledger.evaluate(id, *strategy);
        out << "round " << round << ": cl=" << fmt(cl) << '\n';
        if (cl >= a.accept_cl || round >= a.max_rounds) {
            break;
        }
        for (auto& b : mode.bands) {
            b.budget += a.raise;
        }
        ledger.redeclare(id, mode);
    }
    const auto confirmation = ledger.confirm(id);
    out << "truth v*=" << fmt(confirmation.truth) << '\n';
    for (const auto& alloc : confirmation.settlement.allocations) {
        out << std::left << std::setw(10) << alloc.provider.value << ' ' << format_amount(alloc.amount)
            << '\n';
    }
    if (!a.log.empty()) {
        auto file = open_out(a.log);
        ledger.log().write_ndjson(file);
    }
    return kExitOk;
}

struct ValidateArgs {
    std::string dataset;
    std::string truth;
    bool identities = false;
    double tolerance = 1e-6;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
    const auto raw = load_csv(a.dataset);
    out << "years: " << raw.years.size() << ", columns: " << raw.columns.size()
        << ", missing cells: " << raw.missing_count() << '\n';
    const auto filled = fill_forward(raw);
    int status = kExitOk;
    if (a.identities) {
        for (const auto& rule : gdp_identities(a.tolerance)) {
            const auto violations = check_identity(filled, rule);
            out << rule.target << ": " << violations.size() << " violation(s)\n";
            for (const auto& v : violations) {
                err << "  " << rule.target << " year " << v.year << " residual " << fmt(v.residual, 6)
                    << '\n';
            }
            if (!violations.empty()) {
                status = kExitData;
            }
        }
    }
    if (!a.truth.empty()) {
        const auto stats = derive_error_stats(filled, a.truth);
        out << "source       mean|e|    sd|e|      mean e     var e\n";
        for (const auto& [name, s] : stats) {
            out << std::left << std::setw(12) << name << ' ' << std::setw(10) << fmt(s.mean_abs_error) << ' '
                << std::setw(10) << fmt(s.std_abs_error) << ' ' << std::setw(10) << fmt(s.mean_signed_error)
                << ' ' << fmt(s.signed_variance) << '\n';
        }
    }
    return status;
}

std::uint64_t env_seed() {
    if (const char* s = std::getenv("IDCS_SEED")) {
        char* end = nullptr;
        const auto v = std::strtoull(s, &end, 10);
        if (end != s && *end == '\0') {
            return v;
        }
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trading protocol, truth estimation and experiments for imprecise digital commodities",
                 "idcs"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Seed provider profiles from known-truth trades");
    c->add_option("--dataset", cal.dataset, "Series CSV")->required();
    c->add_option("--ground-truth", cal.truth, "Ground-truth column")->required();
    c->add_option("--trades", cal.trades, "Calibration trades per provider")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--profiles", cal.profiles, "Profile store to write")->required();

    ExperimentArgs ex;
    ex.seed = env_seed();
    auto* e = app.add_subcommand("experiment", "Error-payment grid over mp x mf");
    e->add_option("--profiles", ex.profiles, "Profile store")->required();
    e->add_option("--mp", ex.mp, "Malicious provider counts")->delimiter(',')->capture_default_str();
    e->add_option("--mf", ex.mf, "Manipulation factors")->delimiter(',')->capture_default_str();
    e->add_option("--seed", ex.seed, "Base seed (default $IDCS_SEED or 0)");
    e->add_option("--out", ex.out, "Grid CSV to write")->required();
    e->add_option("--methods", ex.methods, "IDCSW,Mean,Median,KVoting,KSources")->delimiter(',');
    e->add_option("--functions", ex.functions, "TopOne,TopThreeInverseDistance,AllInverseSquare")
        ->delimiter(',');

    TrajectoryArgs tr;
    tr.seed = env_seed();
    auto* t = app.add_subcommand("trajectory", "Confidence level against cumulative payment");
    t->add_option("--if", tr.if_values, "Improvement exponents")->delimiter(',')->capture_default_str();
    t->add_option("--mp", tr.mp, "Malicious providers")->capture_default_str();
    t->add_option("--budget", tr.budget, "Maximum cumulative budget in units")->capture_default_str();
    t->add_option("--seed", tr.seed, "Seed (default $IDCS_SEED or 0)");
    t->add_option("--out", tr.out, "Trajectory CSV to write")->required();

    TradeArgs td;
    td.seed = env_seed();
    auto* d = app.add_subcommand("trade", "Run one trade end to end on a dataset's average");
    d->add_option("--dataset", td.dataset, "Series CSV")->required();
    d->add_option("--ground-truth", td.truth, "Column used for calibration")->required();
    d->add_option("--trades", td.trades, "Calibration trades per provider")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    d->add_option("--mode", td.mode, "Bands upper:budget:function,...")->capture_default_str();
    d->add_option("--strategy", td.strategy, "Weight strategy")->capture_default_str();
    d->add_option("--accept-cl", td.accept_cl, "Buyer confirms once cl reaches this")->capture_default_str();
    d->add_option("--max-rounds", td.max_rounds, "Redeclaration rounds before confirming anyway")
        ->capture_default_str();
    d->add_option("--raise", td.raise, "Budget added to every band per redeclaration")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    d->add_option("--log", td.log, "Event log (NDJSON) to write");
    d->add_option("--seed", td.seed, "Seed for calibration year selection");

    ValidateArgs va;
    auto* v = app.add_subcommand("validate-dataset", "Check a series CSV");
    v->add_option("--dataset", va.dataset, "Series CSV")->required();
    v->add_option("--ground-truth", va.truth, "Report error statistics against this column");
    v->add_flag("--identities", va.identities, "Check the GDP accounting identities");
    v->add_option("--tolerance", va.tolerance, "Identity tolerance")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c->parsed()) return cmd_calibrate(cal, env_seed(), out);
        if (e->parsed()) return cmd_experiment(ex, out);
        if (t->parsed()) return cmd_trajectory(tr, out, err);
        if (d->parsed()) return cmd_trade(td, out);
        if (v->parsed()) return cmd_validate(va, out, err);
    } catch (const Error& ex_) {
        err << "error (" << to_string(ex_.code()) << "): " << ex_.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace idcs::cli
