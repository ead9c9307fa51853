#include "idcs/dataset.hpp"

#include "idcs/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

namespace idcs {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

[[noreturn]] void parse_fail(std::size_t row, std::size_t col, const std::string& what,
                             const std::string& name = {}) {
    std::string where = "row " + std::to_string(row) + ", column " + std::to_string(col);
    if (!name.empty()) where += " (" + name + ")";
    throw Error(Errc::parse_error, where + ": " + what);
}

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

const SeriesColumn* SeriesTable::column(const std::string& name) const {
    for (const auto& c : columns) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

SeriesColumn* SeriesTable::column(const std::string& name) {
    return const_cast<SeriesColumn*>(std::as_const(*this).column(name));
}

std::size_t SeriesTable::missing_count() const {
    std::size_t n = 0;
    for (const auto& c : columns) {
        for (const auto& cell : c.cells) {
            n += cell ? 0 : 1;
        }
    }
    return n;
}

SeriesTable read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(Errc::parse_error, "row 1: missing header");
    }
    const auto header = split(line);
    if (header.empty() || header[0] != "year") {
        parse_fail(1, 1, "first column must be 'year'");
    }
    SeriesTable t;
    std::set<std::string> names;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty() || !names.insert(header[c]).second) {
            parse_fail(1, c + 1, "empty or duplicate column name '" + header[c] + "'");
        }
        t.columns.push_back({header[c], {}});
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            parse_fail(row, std::min(cells.size(), header.size()) + 1,
                       "expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()));
        }
        int year = 0;
        {
            const auto& y = cells[0];
            auto [p, ec] = std::from_chars(y.data(), y.data() + y.size(), year);
            if (y.empty() || ec != std::errc() || p != y.data() + y.size()) {
                parse_fail(row, 1, "year '" + y + "' is not an integer");
            }
        }
        if (!t.years.empty() && year == t.years.back()) {
            parse_fail(row, 1, "duplicate year " + std::to_string(year));
        }
        if (!t.years.empty() && year < t.years.back()) {
            for (int seen : t.years) {
                if (seen == year) {
                    parse_fail(row, 1, "duplicate year " + std::to_string(year));
                }
            }
            parse_fail(row, 1, "years must be strictly increasing");
        }
        t.years.push_back(year);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto& s = cells[c];
            if (s.empty()) {
                t.columns[c - 1].cells.emplace_back(std::nullopt);
                continue;
            }
            double v = 0.0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
                parse_fail(row, c + 1, "'" + s + "' is not a number", header[c]);
            }
            t.columns[c - 1].cells.emplace_back(v);
        }
    }
    return t;
}

SeriesTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, "cannot open " + path);
    }
    return read_csv(in);
}

void write_csv(std::ostream& out, const SeriesTable& table) {
    out << "year";
    for (const auto& c : table.columns) {
        out << ',' << c.name;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.years.size(); ++r) {
        out << table.years[r];
        for (const auto& c : table.columns) {
            out << ',';
            if (c.cells[r]) {
                out << shortest(*c.cells[r]);
            }
        }
        out << '\n';
    }
}

std::string to_csv(const SeriesTable& table) {
    std::ostringstream out;
    write_csv(out, table);
    return out.str();
}

SeriesTable fill_forward(const SeriesTable& table) {
    SeriesTable out = table;
    for (auto& c : out.columns) {
        for (std::size_t r = 0; r < c.cells.size(); ++r) {
            if (c.cells[r]) {
                continue;
            }
            if (r == 0) {
                throw Error(Errc::unfillable, "column " + c.name + " is missing its first value (year " +
                                                  std::to_string(out.years.front()) + ")");
            }
            c.cells[r] = c.cells[r - 1];
        }
    }
    return out;
}

std::vector<IdentityViolation> check_identity(const SeriesTable& table, const IdentityRule& rule) {
    if (rule.addends.empty()) {
        throw Error(Errc::invalid_rule, "identity for " + rule.target + " has no addends");
    }
    const auto* target = table.column(rule.target);
    if (target == nullptr) {
        throw Error(Errc::invalid_rule, "unknown column " + rule.target);
    }
    std::vector<const SeriesColumn*> parts;
    for (const auto& a : rule.addends) {
        const auto* c = table.column(a);
        if (c == nullptr) {
            throw Error(Errc::invalid_rule, "unknown column " + a);
        }
        parts.push_back(c);
    }
    std::vector<IdentityViolation> out;
    for (std::size_t r = 0; r < table.years.size(); ++r) {
        if (!target->cells[r]) {
            continue;
        }
        double sum = 0.0;
        bool complete = true;
        for (const auto* c : parts) {
            if (!c->cells[r]) {
                complete = false;
                break;
            }
            sum += *c->cells[r];
        }
        if (!complete) {
            continue;
        }
        const double residual = *target->cells[r] - sum;
        if (std::abs(residual) > rule.tolerance) {
            out.push_back({table.years[r], residual});
        }
    }
    return out;
}

std::vector<IdentityRule> gdp_identities(double tolerance) {
    return {
        {"GDP_EA", {"FCE", "GCF", "NE"}, tolerance},
        {"GDP_IA", {"NPT", "WC", "DFA", "BB"}, tolerance},
        {"GDP_PA", {"FI", "SI", "TI"}, tolerance},
    };
}

std::map<std::string, ErrorStats> derive_error_stats(const SeriesTable& table,
                                                     const std::string& ground_truth_column) {
    const auto* truth = table.column(ground_truth_column);
    if (truth == nullptr) {
        throw Error(Errc::missing_column, "ground-truth column " + ground_truth_column + " not found");
    }
    std::map<std::string, ErrorStats> out;
    for (const auto& c : table.columns) {
        if (c.name == ground_truth_column) {
            continue;
        }
        // Two-pass population moments; the tables are tiny.
        std::vector<double> err;
        for (std::size_t r = 0; r < c.cells.size(); ++r) {
            if (c.cells[r] && truth->cells[r]) {
                err.push_back(*c.cells[r] - *truth->cells[r]);
            }
        }
        ErrorStats s;
        s.count = err.size();
        if (!err.empty()) {
            const double n = static_cast<double>(err.size());
            double sum = 0.0, asum = 0.0;
            for (double e : err) {
                sum += e;
                asum += std::abs(e);
            }
            s.mean_signed_error = sum / n;
            s.mean_abs_error = asum / n;
            double v = 0.0, av = 0.0;
            for (double e : err) {
                v += (e - s.mean_signed_error) * (e - s.mean_signed_error);
                av += (std::abs(e) - s.mean_abs_error) * (std::abs(e) - s.mean_abs_error);
            }
            s.signed_variance = v / n;
            s.std_abs_error = std::sqrt(av / n);
        }
        out.emplace(c.name, s);
    }
    return out;
}

const std::vector<std::string>& gdp_column_names() {
    static const std::vector<std::string> names = {"FCE", "GCF",    "NE", "GDP_EA", "NPT", "WC",    "DFA",
                                                   "BB",  "GDP_IA", "FI", "SI",     "TI",  "GDP_PA"};
    return names;
}

}  // namespace idcs
