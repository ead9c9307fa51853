#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idcs {

enum class Errc {
    invalid_parameter,
    invalid_input,
    not_calibrated,
    unsupported_size,
    invalid_mode,
    invalid_redeclaration,
    stale_stage,
    empty_round,
    unknown_trade,
    corrupt_log,
    parse_error,
    unfillable,
    invalid_rule,
    missing_column,
    invalid_config,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace idcs
