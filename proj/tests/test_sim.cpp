#include "helpers.hpp"

#include "idcs/error.hpp"
#include "idcs/rng.hpp"
#include "idcs/sim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace idcs;
using test_support::views;

TEST_CASE("rng derivations are pinned") {
    // The engine itself is fixed by the standard.
    std::mt19937_64 ref(5489u);
    ref.discard(9999);
    CHECK(ref() == 9981545732273789042ULL);

    Rng r(42);
    std::mt19937_64 e(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(r.uniform01() == static_cast<double>(e() >> 11) * 0x1.0p-53);
    }
    for (int i = 0; i < 100; ++i) {
        const double u1 = static_cast<double>(e() >> 11) * 0x1.0p-53;
        const double u2 = static_cast<double>(e() >> 11) * 0x1.0p-53;
        CHECK(r.normal() == std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2));
    }
    for (std::size_t n : {1u, 2u, 7u, 1000u}) {
        const double u = static_cast<double>(e() >> 11) * 0x1.0p-53;
        CHECK(r.below(n) == static_cast<std::size_t>(u * static_cast<double>(n)));
    }
}

TEST_CASE("rng permutation") {
    Rng r(1);
    for (std::size_t n : {0u, 1u, 5u, 12u}) {
        auto p = r.permutation(n);
        std::sort(p.begin(), p.end());
        for (std::size_t i = 0; i < n; ++i) CHECK(p[i] == i);
    }
    Rng a(9), b(9);
    CHECK(a.permutation(12) == b.permutation(12));
}

TEST_CASE("normal draws have the right moments") {
    Rng r(7);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal(3.0, 2.0);
        s += z;
        s2 += z * z;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean - 3.0) < 4 * 2.0 / std::sqrt(n));
    CHECK(std::abs(var - 4.0) < 0.05);
}

TEST_CASE("reference providers carry the published error table") {
    const auto& ps = gdp_reference_providers();
    REQUIRE(ps.size() == 12);
    CHECK(ps[0].id.value == "FCE");
    CHECK(ps[0].mean_error == 2.4069);
    CHECK(ps[0].stddev == 1.5291);
    CHECK(ps[2].id.value == "NE");
    CHECK(ps[2].mean_error == 33.6287);
    CHECK(ps[11].id.value == "TI");
    CHECK(ps[11].stddev == 1.9201);
}

TEST_CASE("inject_malicious") {
    const auto vs = views({10, 20, 30, 40});
    Rng r(3);
    CHECK(inject_malicious(vs, 0, 1.2, r) == vs);
    CHECK(inject_malicious(vs, 4, 1.0, r) == vs);
    const auto one = inject_malicious(std::vector{View{ProviderId{"x"}, 10.0}}, 1, 1.2, r);
    CHECK(one[0].value == doctest::Approx(12.0));

    for (int t = 0; t < 50; ++t) {
        const auto out = inject_malicious(vs, 2, 1.5, r);
        int changed = 0;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (out[i].value != vs[i].value) {
                CHECK(out[i].value == doctest::Approx(vs[i].value * 1.5));
                ++changed;
            }
        }
        CHECK(changed == 2);
    }
    try {
        inject_malicious(vs, 5, 1.2, r);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_parameter);
    }
}

TEST_CASE("malicious sets are nested in mp") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::set<std::size_t> prev;
        for (std::size_t mp = 0; mp <= 12; ++mp) {
            Rng r(seed);
            const auto chosen = choose_malicious(12, mp, r);
            const std::set<std::size_t> now(chosen.begin(), chosen.end());
            CHECK(now.size() == mp);
            CHECK(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
            prev = now;
        }
    }
}

TEST_CASE("improvement step") {
    CHECK(improvement_step(5.0, 5.0, 0, 0.1, 0.1) == 5.0);
    CHECK(std::abs(improvement_step(6.0, 5.0, 0, 0.1, 0.1) - 5.0 - (1 - 0.1 * std::exp(0.1))) < 1e-12);
    CHECK(std::abs(improvement_step(6.0, 5.0, 0, 0.1, 0.1) - 5.88948) < 1e-5);
    CHECK(std::abs(improvement_step(4.0, 5.0, 0, 0.1, 0.1) - (5.0 - 0.889483)) < 1e-6);
    // a e^{0.4 (j+1)} >= 1 once j+1 >= ln(10)/0.4, i.e. j >= 5.
    CHECK(improvement_step(9.0, 5.0, 5, 0.1, 0.4) == 5.0);
    CHECK(improvement_step(9.0, 5.0, 50, 0.1, 0.4) == 5.0);
    CHECK(improvement_step(9.0, 5.0, 4, 0.1, 0.4) > 5.0);

    for (double a : {0.01, 0.1, 0.5}) {
        for (double f : {0.05, 0.1, 0.4, 1.0}) {
            for (std::size_t j = 0; j < 60; ++j) {
                for (double cur : {-3.0, 0.5, 7.25}) {
                    const double next = improvement_step(cur, 1.0, j, a, f);
                    CHECK(std::abs(next - 1.0) <= std::abs(cur - 1.0));
                    CHECK((next - 1.0) * (cur - 1.0) >= 0.0);
                }
            }
        }
    }
}

TEST_CASE("experiment config validation") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate(12));
    auto code = [](ExperimentConfig cfg) {
        try {
            cfg.validate(12);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::invalid_input;
    };
    auto bad = c;
    bad.malicious = 13;
    CHECK(code(bad) == Errc::invalid_config);
    bad = c;
    bad.manipulation = 0;
    CHECK(code(bad) == Errc::invalid_config);
    bad = c;
    bad.repetitions = 0;
    CHECK(code(bad) == Errc::invalid_config);
    bad = c;
    bad.methods.clear();
    CHECK(code(bad) == Errc::invalid_config);
    bad = c;
    bad.budget = -1;
    CHECK(code(bad) == Errc::invalid_config);
}

TEST_CASE("synthesize_table") {
    Rng r(1);
    const auto m = gdp_synthetic_market();
    const auto t = synthesize_table(m, r);
    CHECK(t.years.size() == 20);
    CHECK(t.years.front() == 1995);
    REQUIRE(t.columns.size() == 13);
    CHECK(t.columns.back().name == "GDP_PA");
    CHECK(t.missing_count() == 0);

    // With as_given signs and tiny spreads the columns sit at truth + mean.
    SyntheticMarket tight;
    tight.providers = {{ProviderId{"a"}, 2.0, 1e-9}, {ProviderId{"b"}, -1.0, 1e-9}};
    Rng r2(2);
    const auto t2 = synthesize_table(tight, r2);
    for (std::size_t y = 0; y < 20; ++y) {
        CHECK(*t2.columns[0].cells[y] - *t2.columns[2].cells[y] == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(*t2.columns[1].cells[y] - *t2.columns[2].cells[y] == doctest::Approx(-1.0).epsilon(1e-6));
    }
}

TEST_CASE("shipped fixture is reproducible from the generator") {
    Rng r(20150101);
    auto t = synthesize_table(gdp_synthetic_market(), r);
    auto blank = [](const std::string& c, int y) {
        if (c == "GDP_EA" || c == "FCE" || c == "GCF" || c == "NE") return y == 2014;
        if (c == "GDP_IA" || c == "NPT" || c == "WC" || c == "DFA" || c == "BB")
            return y == 2004 || y == 2008 || y >= 2011;
        return false;
    };
    for (auto& c : t.columns)
        for (std::size_t i = 0; i < t.years.size(); ++i) {
            if (blank(c.name, t.years[i])) c.cells[i].reset();
            else c.cells[i] = std::round(*c.cells[i] * 1e4) / 1e4;
        }
    CHECK(load_csv(std::string(IDCS_SOURCE_DIR) + "/data/gdp_synthetic.csv") == t);
}

TEST_CASE("clean data costs nothing") {
    // Every provider reports the truth: all methods land on v^g.
    SeriesTable t;
    for (int y = 0; y < 20; ++y) t.years.push_back(2000 + y);
    SeriesColumn truth{"G", {}};
    for (int y = 0; y < 20; ++y) truth.cells.emplace_back(5.0 + 0.1 * y);
    for (const char* n : {"a", "b", "c", "d"}) t.columns.push_back({n, truth.cells});
    t.columns.push_back(truth);
    ExperimentConfig c;
    c.malicious = 0;
    c.manipulation = 1.0;
    const auto run = run_error_payment_grid(c, t, "G");
    CHECK(run.cells.size() == 15);
    for (const auto& cell : run.cells) {
        CHECK(cell.per_repetition.size() == 10);
        for (double e : cell.per_repetition) CHECK(e == 0.0);
    }
}

TEST_CASE("error payment grid is deterministic and thread independent") {
    ExperimentConfig c;
    c.seed = 77;
    c.malicious = 3;
    c.manipulation = 1.2;
    c.repetitions = 12;
    const auto m = gdp_synthetic_market();
    const auto a = run_error_payment_grid(c, m);
    const auto b = run_error_payment_grid(c, m);
    c.parallel = false;
    const auto s = run_error_payment_grid(c, m);
    std::ostringstream oa, ob, os;
    write_error_payment_csv(oa, std::vector{a});
    write_error_payment_csv(ob, std::vector{b});
    write_error_payment_csv(os, std::vector{s});
    CHECK(oa.str() == ob.str());
    CHECK(oa.str() == os.str());
    CHECK(oa.str().rfind("method,function,mp,mf,if,repetition,error_payment\n", 0) == 0);
    // 5 methods x 3 functions x 12 repetitions, plus the header.
    const auto text = oa.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 181);
    for (const auto& cell : a.cells)
        for (double e : cell.per_repetition) {
            CHECK(e >= 0.0);
            CHECK(e <= 2.0 + 1e-9);
        }
}

TEST_CASE("repetition r depends only on seed + r") {
    ExperimentConfig c;
    c.malicious = 3;
    c.manipulation = 1.2;
    c.seed = 10;
    c.repetitions = 4;
    const auto long_run = run_error_payment_grid(c, gdp_synthetic_market());
    c.seed = 12;
    c.repetitions = 2;
    const auto tail = run_error_payment_grid(c, gdp_synthetic_market());
    for (std::size_t i = 0; i < tail.cells.size(); ++i) {
        CHECK(tail.cells[i].per_repetition[0] == long_run.cells[i].per_repetition[2]);
        CHECK(tail.cells[i].per_repetition[1] == long_run.cells[i].per_repetition[3]);
    }
}

TEST_CASE("confidence trajectory") {
    ExperimentConfig c;
    c.malicious = 3;
    c.manipulation = 1.6;
    const auto m = gdp_synthetic_market();
    const auto zero = run_confidence_trajectory(c, m, 0);
    REQUIRE(zero.size() == 1);
    CHECK(zero[0].cumulative_budget == 0.0);

    const auto t = run_confidence_trajectory(c, m, 25);
    REQUIRE(t.size() == 26);
    CHECK(t[0].confidence == zero[0].confidence);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t[i].round == i);
        CHECK(t[i].cumulative_budget == static_cast<double>(i));
        CHECK(t[i].confidence >= 0.0);
        CHECK(t[i].confidence <= 1.0);
    }
    const auto again = run_confidence_trajectory(c, m, 25);
    std::ostringstream x, y;
    write_trajectory_csv(x, t);
    write_trajectory_csv(y, again);
    CHECK(x.str() == y.str());
    CHECK(x.str().rfind("round,cumulative_budget,cl\n", 0) == 0);

    CHECK(budget_to_reach(t, 0.0) == 0.0);
    CHECK_FALSE(budget_to_reach(t, 1.5).has_value());
}
