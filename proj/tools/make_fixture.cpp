// Regenerates data/gdp_synthetic.csv: a synthetic stand-in for the GDP
// table with the same shape and gaps (values to 4 decimals).
#include "idcs/dataset.hpp"
#include "idcs/sim.hpp"

#include <cmath>
#include <iostream>

namespace {

bool blank(const std::string& column, int year) {
    if (column == "GDP_EA" || column == "FCE" || column == "GCF" || column == "NE") {
        return year == 2014;
    }
    if (column == "GDP_IA" || column == "NPT" || column == "WC" || column == "DFA" || column == "BB") {
        return year == 2004 || year == 2008 || year >= 2011;
    }
    return false;
}

}  // namespace

int main() {
    idcs::Rng rng(20150101);
    auto market = idcs::gdp_synthetic_market();
    auto table = idcs::synthesize_table(market, rng);
    for (auto& c : table.columns) {
        for (std::size_t i = 0; i < table.years.size(); ++i) {
            if (blank(c.name, table.years[i])) {
                c.cells[i].reset();
            } else {
                c.cells[i] = std::round(*c.cells[i] * 1e4) / 1e4;
            }
        }
    }
    idcs::write_csv(std::cout, table);
}
