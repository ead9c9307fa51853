#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace idcs {

/// Year-indexed multi-source series. Missing cells are std::nullopt.
struct SeriesColumn {
    std::string name;
    std::vector<std::optional<double>> cells;

    friend bool operator==(const SeriesColumn&, const SeriesColumn&) = default;
};

struct SeriesTable {
    std::vector<int> years;
    std::vector<SeriesColumn> columns;

    const SeriesColumn* column(const std::string& name) const;
    SeriesColumn* column(const std::string& name);
    std::size_t missing_count() const;
    friend bool operator==(const SeriesTable&, const SeriesTable&) = default;
};

/// Header row required, first column `year`; blank cells are missing.
SeriesTable read_csv(std::istream& in);
SeriesTable load_csv(const std::string& path);
void write_csv(std::ostream& out, const SeriesTable& table);
std::string to_csv(const SeriesTable& table);

/// Replaces each missing cell by the previous year's value of the same column.
SeriesTable fill_forward(const SeriesTable& table);

struct IdentityRule {
    std::string target;
    std::vector<std::string> addends;
    double tolerance = 1e-6;
};

struct IdentityViolation {
    int year = 0;
    double residual = 0.0;  // target - sum of addends
};

std::vector<IdentityViolation> check_identity(const SeriesTable& table, const IdentityRule& rule);

/// The three accounting identities linking the GDP approaches.
std::vector<IdentityRule> gdp_identities(double tolerance);

struct ErrorStats {
    double mean_abs_error = 0.0;
    double std_abs_error = 0.0;  // population standard deviation of |error|
    double mean_signed_error = 0.0;
    double signed_variance = 0.0;  // population variance of signed error
    std::size_t count = 0;
};

/// Error of every other column against `ground_truth_column`, column minus
/// truth. Rows where either cell is missing are skipped.
std::map<std::string, ErrorStats> derive_error_stats(const SeriesTable& table,
                                                     const std::string& ground_truth_column);

/// Column names in the order the GDP case lists them.
const std::vector<std::string>& gdp_column_names();

}  // namespace idcs
