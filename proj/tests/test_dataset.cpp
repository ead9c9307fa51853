#include "idcs/dataset.hpp"
#include "idcs/error.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace idcs;

namespace {

SeriesTable parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

std::string parse_error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse_error);
        return e.what();
    }
    FAIL("expected a parse error");
    return {};
}

}  // namespace

TEST_CASE("read_csv") {
    const auto t = parse("year,A,B\n2001,1.5,2\n2002,,3\n2003,-0.25,4e1\n");
    CHECK(t.years == std::vector<int>{2001, 2002, 2003});
    REQUIRE(t.columns.size() == 2);
    CHECK(t.columns[0].name == "A");
    CHECK(t.columns[0].cells[0] == 1.5);
    CHECK_FALSE(t.columns[0].cells[1].has_value());
    CHECK(t.columns[1].cells[2] == 40.0);
    CHECK(t.missing_count() == 1);
    CHECK(t.column("B") != nullptr);
    CHECK(t.column("C") == nullptr);

    // CRLF and a trailing blank line are tolerated.
    CHECK(parse("year,A\r\n2001,1\r\n\r\n").years == std::vector<int>{2001});
}

TEST_CASE("read_csv errors name their location") {
    CHECK(parse_error_of("year,A\n2001,1\n2001,2\n").find("row 3") != std::string::npos);
    const auto bad = parse_error_of("year,A,B\n2001,1,2\n2002,x,2\n");
    CHECK(bad.find("row 3") != std::string::npos);
    CHECK(bad.find("column 2 (A)") != std::string::npos);
    CHECK(parse_error_of("year,A\n2001,1,5\n").find("row 2") != std::string::npos);
    parse_error_of("year,A\n2002,1\n2001,1\n");
    parse_error_of("");
    parse_error_of("when,A\n2001,1\n");
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), Error);
}

TEST_CASE("csv round trip") {
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> u(-100, 100);
    SeriesTable t;
    for (int y = 1990; y < 2010; ++y) t.years.push_back(y);
    for (const char* name : {"A", "B_C", "D"}) {
        SeriesColumn c{name, {}};
        for (std::size_t i = 0; i < t.years.size(); ++i) {
            if (gen() % 5 == 0) c.cells.emplace_back();
            else c.cells.emplace_back(u(gen));
        }
        t.columns.push_back(c);
    }
    const auto text = to_csv(t);
    CHECK(parse(text) == t);
    CHECK(to_csv(parse(text)) == text);
}

TEST_CASE("fill_forward") {
    const auto t = fill_forward(parse("year,A,B\n1,5.0,1\n2,,2\n3,,3\n"));
    CHECK(t.column("A")->cells == std::vector<std::optional<double>>{5.0, 5.0, 5.0});
    CHECK(t.missing_count() == 0);

    const auto full = parse("year,A\n1,1\n2,2\n");
    CHECK(fill_forward(full) == full);

    try {
        fill_forward(parse("year,A\n1,\n2,3.0\n"));
        FAIL("expected unfillable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unfillable);
    }
}

TEST_CASE("fill_forward is idempotent") {
    const auto t = load_csv(std::string(IDCS_SOURCE_DIR) + "/data/gdp_synthetic.csv");
    const auto once = fill_forward(t);
    CHECK(fill_forward(once) == once);
    CHECK(once.missing_count() == 0);
    CHECK(t.missing_count() == 34);
}

TEST_CASE("check_identity") {
    const auto t = parse("year,T,A,B,C\n1,6,1,2,3\n2,6.1,1,2,3\n");
    const IdentityRule rule{"T", {"A", "B", "C"}, 1e-6};
    const auto v = check_identity(t, rule);
    REQUIRE(v.size() == 1);
    CHECK(v[0].year == 2);
    CHECK(v[0].residual == doctest::Approx(0.1));

    CHECK(check_identity(parse("year,T,A,B,C\n1,6,1,2,3\n"), rule).empty());
    CHECK(check_identity(parse("year,T,A,B,C\n1,6.1,1,2,3\n"), {"T", {"A", "B", "C"}, 0.05}).size() == 1);
    CHECK(check_identity(t, {"T", {"A"}, std::numeric_limits<double>::infinity()}).empty());

    auto code = [&](const IdentityRule& r) {
        try {
            check_identity(t, r);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::invalid_input;
    };
    CHECK(code({"T", {"A", "Z"}, 1}) == Errc::invalid_rule);
    CHECK(code({"Z", {"A"}, 1}) == Errc::invalid_rule);
    CHECK(code({"T", {}, 1}) == Errc::invalid_rule);

    const auto rules = gdp_identities(1e-3);
    REQUIRE(rules.size() == 3);
    CHECK(rules[0].target == "GDP_EA");
    CHECK(rules[1].addends == std::vector<std::string>{"NPT", "WC", "DFA", "BB"});
}

TEST_CASE("derive_error_stats") {
    const auto t = parse("year,G,Same,Off,Mixed\n1,1,1,3,0\n2,2,2,4,4\n3,4,4,6,4\n");
    const auto s = derive_error_stats(t, "G");
    CHECK(s.size() == 3);
    CHECK(s.at("Same").mean_abs_error == 0);
    CHECK(s.at("Same").std_abs_error == 0);
    CHECK(s.at("Off").mean_abs_error == 2);
    CHECK(s.at("Off").std_abs_error == 0);
    CHECK(s.at("Off").mean_signed_error == 2);
    // Mixed errors -1, 2, 0: |e| = 1, 2, 0.
    CHECK(s.at("Mixed").mean_abs_error == doctest::Approx(1.0));
    CHECK(s.at("Mixed").std_abs_error == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(s.at("Mixed").mean_signed_error == doctest::Approx(1.0 / 3.0));
    CHECK(s.at("Mixed").signed_variance == doctest::Approx((16.0 / 9 + 25.0 / 9 + 1.0 / 9) / 3));
    CHECK(s.at("Mixed").count == 3);

    try {
        derive_error_stats(t, "nope");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_column);
    }
}

TEST_CASE("synthetic fixture shape") {
    const auto t = load_csv(std::string(IDCS_SOURCE_DIR) + "/data/gdp_synthetic.csv");
    CHECK(t.years.front() == 1995);
    CHECK(t.years.back() == 2014);
    std::vector<std::string> names;
    for (const auto& c : t.columns) names.push_back(c.name);
    CHECK(names == gdp_column_names());
    const auto s = derive_error_stats(fill_forward(t), "GDP_PA");
    CHECK(s.size() == 12);
}

// Runs only when the genuine statistics-bureau table is supplied, either as
// data/gdp_nbs.csv or through IDCS_GDP_CSV.
TEST_CASE("golden: FCE row of the published table") {
    std::string path = std::string(IDCS_SOURCE_DIR) + "/data/gdp_nbs.csv";
    if (const char* env = std::getenv("IDCS_GDP_CSV")) path = env;
    if (!std::filesystem::exists(path)) {
        MESSAGE("no real GDP table at " << path << "; golden check skipped");
        return;
    }
    const auto s = derive_error_stats(fill_forward(load_csv(path)), "GDP_PA").at("FCE");
    const bool abs_conv = std::abs(s.mean_abs_error - 2.4069) < 5e-4 && std::abs(s.std_abs_error - 1.5291) < 5e-4;
    const bool signed_conv = std::abs(std::abs(s.mean_signed_error) - 2.4069) < 5e-4 &&
                             std::abs(std::sqrt(s.signed_variance) - 1.5291) < 5e-4;
    CHECK((abs_conv || signed_conv));
}
