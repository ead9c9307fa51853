#pragma once

#include "idcs/payment.hpp"
#include "idcs/truth.hpp"

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace idcs {

struct TradeId {
    std::uint64_t value = 0;

    friend auto operator<=>(const TradeId&, const TradeId&) = default;
};

enum class TradeStage { declared, collecting, evaluated, settled };

std::string_view to_string(TradeStage stage) noexcept;

enum class EventType {
    declared,
    view_submitted,
    evaluated,
    confirmed,
    redeclared,
    settled,
    calibration_trade,
};

std::string_view to_string(EventType type) noexcept;

struct LedgerEvent {
    std::uint64_t seq = 0;
    std::int64_t ts = 0;
    EventType type = EventType::declared;
    nlohmann::json body;

    friend bool operator==(const LedgerEvent&, const LedgerEvent&) = default;
};

/// Append-only record; serialised as one JSON object per line with fields
/// {seq, ts, type, body}.
class EventLog {
public:
    const std::vector<LedgerEvent>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    const LedgerEvent& append(std::int64_t ts, EventType type, nlohmann::json body);

    void write_ndjson(std::ostream& out) const;
    std::string to_ndjson() const;

    /// Parses without checking sequence continuity; replay does that.
    static EventLog read_ndjson(std::istream& in);
    static EventLog from_ndjson(const std::string& text);

    /// Appends a raw event verbatim (used when loading).
    void push_raw(LedgerEvent event) { events_.push_back(std::move(event)); }

    friend bool operator==(const EventLog&, const EventLog&) = default;

private:
    std::vector<LedgerEvent> events_;
};

/// Fixed 9-fractional-digit decimal used for every amount in the log.
std::string format_amount(double amount);

struct CalibrationPair {
    double ground_truth = 0.0;
    double view = 0.0;
};

struct LedgerOptions {
    double error_threshold = kDefaultErrorThreshold;
    std::size_t min_calibration_trades = 10;
    std::size_t k = kDefaultK;
    /// Timestamp source for log events; milliseconds since the epoch.
    std::function<std::int64_t()> clock;
};

/// Logical clock: 1, 2, 3, ... Deterministic logs for tests and the CLI.
std::function<std::int64_t()> logical_clock();
std::function<std::int64_t()> system_clock_ms();

enum class Submission { accepted, duplicate, uncalibrated };

enum class Redeclaration { accepted, rejected };

struct Confirmation {
    double truth = 0.0;
    Settlement settlement;
};

struct Trade {
    TradeId id;
    std::string commodity;
    TradeStage stage = TradeStage::declared;
    PaymentMode mode;
    double error_threshold = kDefaultErrorThreshold;
    std::uint64_t redeclare_count = 0;
    std::vector<View> views;
    std::optional<Strategy> strategy;
    std::optional<Estimate> estimate;
    std::optional<Settlement> settlement;

    friend bool operator==(const Trade&, const Trade&) = default;
};

/// Read-only view handed to buyers and providers. The estimated truth is
/// only present once the trade is settled.
struct TradeSnapshot {
    TradeId id;
    std::string commodity;
    TradeStage stage;
    PaymentMode mode;
    std::uint64_t redeclare_count;
    std::size_t view_count;
    std::optional<double> confidence;
    std::optional<double> revealed_truth;
    std::optional<Settlement> settlement;
};

/// The trusted intermediary. Drives trades through
/// declared -> collecting -> evaluated -> {settled | redeclared -> declared},
/// owns provider profiles and records every accepted operation.
class Ledger {
public:
    explicit Ledger(LedgerOptions options = {});

    TradeId declare(PaymentMode mode, std::string commodity);
    Submission submit_view(TradeId id, const ProviderId& provider, double value);
    /// Returns the confidence level only; the estimate stays inside the ledger.
    double evaluate(TradeId id, Strategy strategy);
    Confirmation confirm(TradeId id);
    Redeclaration redeclare(TradeId id, PaymentMode new_mode);
    const ProviderProfile& calibrate(const ProviderId& provider,
                                     std::span<const CalibrationPair> pairs);

    /// Rebuilds a ledger by re-executing a log. Throws Errc::corrupt_log on
    /// sequence gaps, unknown payloads or recomputed results that differ
    /// from the recorded ones.
    static Ledger replay(const EventLog& log, LedgerOptions options = {});

    TradeSnapshot snapshot(TradeId id) const;
    /// Trades still accepting views, i.e. declared modes visible to providers.
    std::vector<TradeSnapshot> open_trades() const;
    std::optional<ProviderProfile> profile(const ProviderId& provider) const;
    std::vector<ProviderProfile> profiles() const;
    void write_profiles_csv(std::ostream& out) const;

    const EventLog& log() const { return log_; }
    const LedgerOptions& options() const { return options_; }

    /// Trades and profiles; the log and clock are not compared.
    bool same_state(const Ledger& other) const;

private:
    Trade& find(TradeId id);
    const Trade& find(TradeId id) const;
    const LedgerEvent& record(EventType type, nlohmann::json body);

    LedgerOptions options_;
    std::uint64_t next_trade_ = 1;
    std::map<TradeId, Trade> trades_;
    std::map<ProviderId, ProviderProfile> profiles_;
    EventLog log_;
    const EventLog* replay_source_ = nullptr;
};

/// Profile store: CSV with header provider_id,count,mean_error,variance,calibrated.
void write_profiles_csv(std::ostream& out, std::span<const ProviderProfile> profiles);
std::vector<ProviderProfile> read_profiles_csv(std::istream& in);

nlohmann::json mode_to_json(const PaymentMode& mode);
PaymentMode mode_from_json(const nlohmann::json& j);

/// Parses "0.5:0:TopOne,inf:100:TopOne" style band lists.
PaymentMode parse_mode(std::string_view text);

}  // namespace idcs
