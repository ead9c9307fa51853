#include "idcs/ledger.hpp"

#include "idcs/error.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace idcs {

using nlohmann::json;

std::string_view to_string(TradeStage stage) noexcept {
    switch (stage) {
        case TradeStage::declared: return "Declared";
        case TradeStage::collecting: return "Collecting";
        case TradeStage::evaluated: return "Evaluated";
        case TradeStage::settled: return "Settled";
    }
    return "unknown";
}

std::string_view to_string(EventType type) noexcept {
    switch (type) {
        case EventType::declared: return "Declared";
        case EventType::view_submitted: return "ViewSubmitted";
        case EventType::evaluated: return "Evaluated";
        case EventType::confirmed: return "Confirmed";
        case EventType::redeclared: return "Redeclared";
        case EventType::settled: return "Settled";
        case EventType::calibration_trade: return "CalibrationTrade";
    }
    return "unknown";
}

namespace {

std::optional<EventType> parse_event_type(std::string_view name) {
    for (auto t : {EventType::declared, EventType::view_submitted, EventType::evaluated,
                   EventType::confirmed, EventType::redeclared, EventType::settled,
                   EventType::calibration_trade}) {
        if (name == to_string(t)) {
            return t;
        }
    }
    return std::nullopt;
}

// Budgets live on the 1e-9 grid so that the logged decimal parses back to
// the identical double.
double canonical_amount(double amount) { return std::strtod(format_amount(amount).c_str(), nullptr); }

PaymentMode canonical_mode(PaymentMode mode) {
    for (auto& b : mode.bands) {
        b.budget = canonical_amount(b.budget);
    }
    return mode;
}

}  // namespace

std::string format_amount(double amount) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", amount);
    std::string s = buf;
    if (s == "-0.000000000") {
        s = "0.000000000";
    }
    return s;
}

const LedgerEvent& EventLog::append(std::int64_t ts, EventType type, json body) {
    events_.push_back(LedgerEvent{events_.size() + 1, ts, type, std::move(body)});
    return events_.back();
}

void EventLog::write_ndjson(std::ostream& out) const {
    for (const auto& e : events_) {
        json line = {{"seq", e.seq}, {"ts", e.ts}, {"type", to_string(e.type)}, {"body", e.body}};
        out << line.dump() << '\n';
    }
}

std::string EventLog::to_ndjson() const {
    std::ostringstream out;
    write_ndjson(out);
    return out.str();
}

EventLog EventLog::read_ndjson(std::istream& in) {
    EventLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            const auto type = parse_event_type(j.at("type").get<std::string>());
            if (!type) {
                throw Error(Errc::corrupt_log, "line " + std::to_string(lineno) + ": unknown event type");
            }
            log.push_raw(LedgerEvent{j.at("seq").get<std::uint64_t>(), j.at("ts").get<std::int64_t>(),
                                     *type, j.at("body")});
        } catch (const json::exception& ex) {
            throw Error(Errc::corrupt_log, "line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return log;
}

EventLog EventLog::from_ndjson(const std::string& text) {
    std::istringstream in(text);
    return read_ndjson(in);
}

std::function<std::int64_t()> logical_clock() {
    auto tick = std::make_shared<std::int64_t>(0);
    return [tick] { return ++*tick; };
}

std::function<std::int64_t()> system_clock_ms() {
    return [] {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    };
}

json mode_to_json(const PaymentMode& mode) {
    json bands = json::array();
    for (const auto& b : mode.bands) {
        json upper = std::isinf(b.upper_cl) ? json("inf") : json(b.upper_cl);
        bands.push_back({{"upper_cl", upper},
                         {"budget", format_amount(b.budget)},
                         {"function", to_string(b.function.kind)}});
    }
    return json{{"bands", bands}};
}

PaymentMode mode_from_json(const json& j) {
    PaymentMode mode;
    for (const auto& b : j.at("bands")) {
        PaymentBand band;
        const auto& upper = b.at("upper_cl");
        band.upper_cl = upper.is_string() && upper.get<std::string>() == "inf" ? kUnbounded
                                                                              : upper.get<double>();
        band.budget = std::strtod(b.at("budget").get<std::string>().c_str(), nullptr);
        const auto kind = parse_payment_kind(b.at("function").get<std::string>());
        if (!kind) {
            throw Error(Errc::invalid_mode, "unknown payment function");
        }
        band.function.kind = *kind;
        mode.bands.push_back(band);
    }
    return mode;
}

PaymentMode parse_mode(std::string_view text) {
    PaymentMode mode;
    std::string all(text);
    std::istringstream bands(all);
    std::string band;
    while (std::getline(bands, band, ',')) {
        std::istringstream parts(band);
        std::string upper, budget, function;
        if (!std::getline(parts, upper, ':') || !std::getline(parts, budget, ':') ||
            !std::getline(parts, function)) {
            throw Error(Errc::invalid_mode, "band '" + band + "' is not upper:budget:function");
        }
        PaymentBand b;
        char* end = nullptr;
        if (upper == "inf") {
            b.upper_cl = kUnbounded;
        } else {
            b.upper_cl = std::strtod(upper.c_str(), &end);
            if (end == upper.c_str() || *end != '\0') {
                throw Error(Errc::invalid_mode, "bad threshold '" + upper + "'");
            }
        }
        b.budget = std::strtod(budget.c_str(), &end);
        if (end == budget.c_str() || *end != '\0') {
            throw Error(Errc::invalid_mode, "bad budget '" + budget + "'");
        }
        const auto kind = parse_payment_kind(function);
        if (!kind) {
            throw Error(Errc::invalid_mode, "unknown payment function '" + function + "'");
        }
        b.function.kind = *kind;
        mode.bands.push_back(b);
    }
    validate_mode(mode);
    return mode;
}

Ledger::Ledger(LedgerOptions options) : options_(std::move(options)) {
    if (!options_.clock) {
        options_.clock = system_clock_ms();
    }
    if (!(options_.error_threshold > 0.0)) {
        throw Error(Errc::invalid_parameter, "error threshold must be positive");
    }
}

Trade& Ledger::find(TradeId id) {
    auto it = trades_.find(id);
    if (it == trades_.end()) {
        throw Error(Errc::unknown_trade, "unknown trade " + std::to_string(id.value));
    }
    return it->second;
}

const Trade& Ledger::find(TradeId id) const { return const_cast<Ledger*>(this)->find(id); }

const LedgerEvent& Ledger::record(EventType type, json body) {
    // While replaying, every event takes the timestamp recorded at its position.
    std::int64_t ts = 0;
    if (replay_source_ != nullptr && log_.size() < replay_source_->size()) {
        ts = replay_source_->events()[log_.size()].ts;
    } else {
        ts = options_.clock();
    }
    return log_.append(ts, type, std::move(body));
}

TradeId Ledger::declare(PaymentMode mode, std::string commodity) {
    validate_mode(mode);
    Trade t;
    t.id = TradeId{next_trade_++};
    t.commodity = std::move(commodity);
    t.mode = canonical_mode(std::move(mode));
    t.error_threshold = options_.error_threshold;
    record(EventType::declared, {{"trade_id", t.id.value},
                                 {"commodity", t.commodity},
                                 {"error_threshold", t.error_threshold},
                                 {"mode", mode_to_json(t.mode)}});
    const auto id = t.id;
    trades_.emplace(id, std::move(t));
    return id;
}

Submission Ledger::submit_view(TradeId id, const ProviderId& provider, double value) {
    auto& t = find(id);
    if (t.stage != TradeStage::declared && t.stage != TradeStage::collecting) {
        throw Error(Errc::stale_stage, "trade " + std::to_string(id.value) + " is " +
                                           std::string(to_string(t.stage)) + ", not collecting views");
    }
    if (!std::isfinite(value)) {
        throw Error(Errc::invalid_input, "view value must be finite");
    }
    auto p = profiles_.find(provider);
    if (p == profiles_.end() || !p->second.calibrated) {
        return Submission::uncalibrated;
    }
    for (const auto& v : t.views) {
        if (v.provider == provider) {
            return Submission::duplicate;
        }
    }
    t.views.push_back({provider, value});
    t.stage = TradeStage::collecting;
    record(EventType::view_submitted,
           {{"trade_id", id.value}, {"provider", provider.value}, {"value", value}});
    return Submission::accepted;
}

double Ledger::evaluate(TradeId id, Strategy strategy) {
    auto& t = find(id);
    if (t.stage == TradeStage::declared) {
        throw Error(Errc::empty_round, "trade " + std::to_string(id.value) + " has no views");
    }
    if (t.stage != TradeStage::collecting) {
        throw Error(Errc::stale_stage, "trade " + std::to_string(id.value) + " is " +
                                           std::string(to_string(t.stage)) + ", cannot evaluate");
    }
    std::vector<ProviderProfile> aligned;
    aligned.reserve(t.views.size());
    for (const auto& v : t.views) {
        aligned.push_back(profiles_.at(v.provider));
    }
    auto est = estimate_truth(strategy, t.views, aligned, t.error_threshold, options_.k);
    t.strategy = strategy;
    t.estimate = std::move(est);
    t.stage = TradeStage::evaluated;
    record(EventType::evaluated, {{"trade_id", id.value},
                                  {"strategy", to_string(strategy)},
                                  {"confidence", t.estimate->confidence}});
    return t.estimate->confidence;
}

Confirmation Ledger::confirm(TradeId id) {
    auto& t = find(id);
    if (t.stage != TradeStage::evaluated) {
        throw Error(Errc::stale_stage, "trade " + std::to_string(id.value) + " is " +
                                           std::string(to_string(t.stage)) + ", cannot confirm");
    }
    const auto& est = *t.estimate;
    const auto& band = select_band(t.mode, est.confidence);
    auto settlement = distribute(band.function, band.budget, t.views, est.truth);
    record(EventType::confirmed, {{"trade_id", id.value}});

    // Practical trades have no ground truth; the estimate is the reference.
    for (const auto& v : t.views) {
        auto& p = profiles_.at(v.provider);
        p.error_moments = moments_update(p.error_moments, v.value - est.truth);
    }

    json allocs = json::array();
    for (const auto& a : settlement.allocations) {
        allocs.push_back({{"provider", a.provider.value}, {"amount", format_amount(a.amount)}});
    }
    record(EventType::settled, {{"trade_id", id.value},
                                {"truth", est.truth},
                                {"budget", format_amount(band.budget)},
                                {"function", to_string(band.function.kind)},
                                {"allocations", allocs}});
    t.settlement = settlement;
    t.stage = TradeStage::settled;
    return {est.truth, std::move(settlement)};
}

Redeclaration Ledger::redeclare(TradeId id, PaymentMode new_mode) {
    auto& t = find(id);
    if (t.stage != TradeStage::evaluated) {
        throw Error(Errc::stale_stage, "trade " + std::to_string(id.value) + " is " +
                                           std::string(to_string(t.stage)) + ", cannot redeclare");
    }
    validate_mode(new_mode);
    new_mode = canonical_mode(std::move(new_mode));
    if (validate_redeclaration(t.mode, new_mode) == Verdict::reject) {
        return Redeclaration::rejected;
    }
    t.mode = std::move(new_mode);
    t.views.clear();
    t.strategy.reset();
    t.estimate.reset();
    t.stage = TradeStage::declared;
    ++t.redeclare_count;
    record(EventType::redeclared, {{"trade_id", id.value}, {"mode", mode_to_json(t.mode)}});
    return Redeclaration::accepted;
}

const ProviderProfile& Ledger::calibrate(const ProviderId& provider,
                                         std::span<const CalibrationPair> pairs) {
    if (pairs.empty()) {
        throw Error(Errc::invalid_input, "calibration needs at least one known-truth trade");
    }
    for (const auto& pair : pairs) {
        if (!std::isfinite(pair.ground_truth) || !std::isfinite(pair.view)) {
            throw Error(Errc::invalid_input, "calibration values must be finite");
        }
    }
    auto [it, inserted] = profiles_.try_emplace(provider, ProviderProfile{provider, {}, false});
    auto& p = it->second;
    json body_pairs = json::array();
    for (const auto& pair : pairs) {
        p.error_moments = moments_update(p.error_moments, pair.view - pair.ground_truth);
        body_pairs.push_back(json::array({pair.ground_truth, pair.view}));
    }
    p.calibrated = p.error_moments.count >= options_.min_calibration_trades;
    record(EventType::calibration_trade, {{"provider", provider.value}, {"pairs", body_pairs}});
    return p;
}

Ledger Ledger::replay(const EventLog& log, LedgerOptions options) {
    Ledger ledger(std::move(options));
    const auto& events = log.events();
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].seq != i + 1) {
            throw Error(Errc::corrupt_log, "sequence gap: expected " + std::to_string(i + 1) +
                                               ", found " + std::to_string(events[i].seq));
        }
    }
    ledger.replay_source_ = &log;
    try {
        for (const auto& e : events) {
            const auto& b = e.body;
            switch (e.type) {
                case EventType::declared: {
                    const auto id = ledger.declare(mode_from_json(b.at("mode")),
                                                   b.at("commodity").get<std::string>());
                    if (id.value != b.at("trade_id").get<std::uint64_t>()) {
                        throw Error(Errc::corrupt_log, "trade id mismatch at seq " + std::to_string(e.seq));
                    }
                    break;
                }
                case EventType::view_submitted: {
                    const auto r = ledger.submit_view(TradeId{b.at("trade_id").get<std::uint64_t>()},
                                                      ProviderId{b.at("provider").get<std::string>()},
                                                      b.at("value").get<double>());
                    if (r != Submission::accepted) {
                        throw Error(Errc::corrupt_log, "logged view rejected at seq " + std::to_string(e.seq));
                    }
                    break;
                }
                case EventType::evaluated: {
                    const auto s = parse_strategy(b.at("strategy").get<std::string>());
                    if (!s) {
                        throw Error(Errc::corrupt_log, "unknown strategy at seq " + std::to_string(e.seq));
                    }
                    ledger.evaluate(TradeId{b.at("trade_id").get<std::uint64_t>()}, *s);
                    break;
                }
                case EventType::confirmed:
                    ledger.confirm(TradeId{b.at("trade_id").get<std::uint64_t>()});
                    break;
                case EventType::settled:
                    // Emitted by confirm; checked by the log comparison below.
                    break;
                case EventType::redeclared: {
                    const auto r = ledger.redeclare(TradeId{b.at("trade_id").get<std::uint64_t>()},
                                                    mode_from_json(b.at("mode")));
                    if (r != Redeclaration::accepted) {
                        throw Error(Errc::corrupt_log, "logged redeclaration rejected at seq " +
                                                           std::to_string(e.seq));
                    }
                    break;
                }
                case EventType::calibration_trade: {
                    std::vector<CalibrationPair> pairs;
                    for (const auto& p : b.at("pairs")) {
                        pairs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                    }
                    ledger.calibrate(ProviderId{b.at("provider").get<std::string>()}, pairs);
                    break;
                }
            }
        }
    } catch (const json::exception& ex) {
        throw Error(Errc::corrupt_log, std::string("malformed event body: ") + ex.what());
    } catch (const Error& ex) {
        if (ex.code() == Errc::corrupt_log) {
            throw;
        }
        throw Error(Errc::corrupt_log, std::string("logged operation fails on replay: ") + ex.what());
    }
    ledger.replay_source_ = nullptr;
    if (!(ledger.log_ == log)) {
        throw Error(Errc::corrupt_log, "replayed results differ from the recorded log");
    }
    return ledger;
}

TradeSnapshot Ledger::snapshot(TradeId id) const {
    const auto& t = find(id);
    TradeSnapshot s{t.id,
                    t.commodity,
                    t.stage,
                    t.mode,
                    t.redeclare_count,
                    t.views.size(),
                    std::nullopt,
                    std::nullopt,
                    t.settlement};
    if (t.estimate) {
        s.confidence = t.estimate->confidence;
        if (t.stage == TradeStage::settled) {
            s.revealed_truth = t.estimate->truth;
        }
    }
    return s;
}

std::vector<TradeSnapshot> Ledger::open_trades() const {
    std::vector<TradeSnapshot> out;
    for (const auto& [id, t] : trades_) {
        if (t.stage == TradeStage::declared || t.stage == TradeStage::collecting) {
            out.push_back(snapshot(id));
        }
    }
    return out;
}

std::optional<ProviderProfile> Ledger::profile(const ProviderId& provider) const {
    auto it = profiles_.find(provider);
    if (it == profiles_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<ProviderProfile> Ledger::profiles() const {
    std::vector<ProviderProfile> out;
    out.reserve(profiles_.size());
    for (const auto& [id, p] : profiles_) {
        out.push_back(p);
    }
    return out;
}

void Ledger::write_profiles_csv(std::ostream& out) const {
    const auto all = profiles();
    idcs::write_profiles_csv(out, all);
}

bool Ledger::same_state(const Ledger& other) const {
    return next_trade_ == other.next_trade_ && trades_ == other.trades_ &&
           profiles_ == other.profiles_;
}

namespace {

std::string repr(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void write_profiles_csv(std::ostream& out, std::span<const ProviderProfile> profiles) {
    out << "provider_id,count,mean_error,variance,calibrated\n";
    for (const auto& p : profiles) {
        out << p.provider.value << ',' << p.error_moments.count << ',' << repr(p.error_moments.mean)
            << ',' << repr(p.error_moments.variance()) << ',' << (p.calibrated ? "true" : "false")
            << '\n';
    }
}

std::vector<ProviderProfile> read_profiles_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(Errc::parse_error, "profile store is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "provider_id,count,mean_error,variance,calibrated") {
        throw Error(Errc::parse_error, "profile store: unexpected header '" + line + "'");
    }
    std::vector<ProviderProfile> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 5) {
            throw Error(Errc::parse_error, "profile store row " + std::to_string(row) + ": expected 5 fields");
        }
        auto number = [&](std::size_t col) {
            char* end = nullptr;
            const double v = std::strtod(cells[col].c_str(), &end);
            if (cells[col].empty() || *end != '\0' || !std::isfinite(v)) {
                throw Error(Errc::parse_error, "profile store row " + std::to_string(row) + ", column " +
                                                   std::to_string(col + 1) + ": not a number");
            }
            return v;
        };
        ProviderProfile p;
        p.provider.value = cells[0];
        const double count = number(1);
        if (count < 0 || count != std::floor(count)) {
            throw Error(Errc::parse_error, "profile store row " + std::to_string(row) + ": bad count");
        }
        p.error_moments.count = static_cast<std::uint64_t>(count);
        p.error_moments.mean = number(2);
        const double var = number(3);
        if (var < 0) {
            throw Error(Errc::parse_error, "profile store row " + std::to_string(row) + ": negative variance");
        }
        p.error_moments.m2 = var * count;
        if (cells[4] == "true") {
            p.calibrated = true;
        } else if (cells[4] == "false") {
            p.calibrated = false;
        } else {
            throw Error(Errc::parse_error, "profile store row " + std::to_string(row) + ": bad calibrated flag");
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace idcs
