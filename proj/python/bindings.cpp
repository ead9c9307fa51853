// Python module: thin wrappers over the C++ core. Views travel as
// (provider, value) pairs and profiles as (provider, mean_error, variance).
#include "idcs/dataset.hpp"
#include "idcs/error.hpp"
#include "idcs/ledger.hpp"
#include "idcs/payment.hpp"
#include "idcs/sim.hpp"
#include "idcs/stats.hpp"
#include "idcs/truth.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace idcs;

namespace {

using ViewTuple = std::pair<std::string, double>;
using ProfileTuple = std::tuple<std::string, double, double>;

std::vector<View> to_views(const std::vector<ViewTuple>& in) {
    std::vector<View> out;
    for (const auto& [p, v] : in) {
        out.push_back({ProviderId{p}, v});
    }
    return out;
}

std::vector<ProviderProfile> to_profiles(const std::vector<ProfileTuple>& in) {
    std::vector<ProviderProfile> out;
    for (const auto& [p, mean, var] : in) {
        ProviderProfile prof;
        prof.provider = ProviderId{p};
        prof.error_moments.count = 1;
        prof.error_moments.mean = mean;
        prof.error_moments.m2 = var;  // population variance with count 1
        prof.calibrated = true;
        out.push_back(prof);
    }
    return out;
}

std::map<std::string, double> weights_dict(const WeightVector& w) {
    std::map<std::string, double> out;
    for (const auto& e : w.entries) {
        out[e.provider.value] = e.weight;
    }
    return out;
}

std::vector<ViewTuple> settlement_list(const Settlement& s) {
    std::vector<ViewTuple> out;
    for (const auto& a : s.allocations) {
        out.emplace_back(a.provider.value, a.amount);
    }
    return out;
}

Strategy strategy_of(const std::string& name) {
    auto s = parse_strategy(name);
    if (!s) {
        throw Error(Errc::invalid_parameter, "unknown strategy '" + name + "'");
    }
    return *s;
}

PaymentKind kind_of(const std::string& name) {
    auto k = parse_payment_kind(name);
    if (!k) {
        throw Error(Errc::invalid_parameter, "unknown payment function '" + name + "'");
    }
    return *k;
}

}  // namespace

PYBIND11_MODULE(_idcs, m) {
    m.doc() = "Truth estimation, payment and trading ledger for imprecise digital commodities";

    static py::exception<Error> error_type(m, "Error", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("normal_cdf", &normal_cdf, py::arg("x"));
    m.def(
        "interval_prob",
        [](double mean, double variance, double e_t) { return interval_prob({mean, variance}, e_t); },
        py::arg("mean"), py::arg("variance"), py::arg("e_t") = kDefaultErrorThreshold);

    m.def(
        "idcsw_weights",
        [](const std::vector<ProfileTuple>& profiles, double e_t) {
            return weights_dict(idcsw_weights(to_profiles(profiles), e_t));
        },
        py::arg("profiles"), py::arg("e_t") = kDefaultErrorThreshold);

    m.def(
        "estimate_truth",
        [](const std::string& strategy, const std::vector<ViewTuple>& views,
           const std::vector<ProfileTuple>& profiles, double e_t, std::size_t k) {
            const auto est = estimate_truth(strategy_of(strategy), to_views(views), to_profiles(profiles), e_t, k);
            py::dict d;
            d["truth"] = est.truth;
            d["error_mean"] = est.error_dist.mean;
            d["error_variance"] = est.error_dist.variance;
            d["confidence"] = est.confidence;
            d["weights"] = weights_dict(est.weights);
            return d;
        },
        py::arg("strategy"), py::arg("views"), py::arg("profiles"), py::arg("e_t") = kDefaultErrorThreshold,
        py::arg("k") = kDefaultK);

    m.def(
        "distribute",
        [](const std::string& function, double budget, const std::vector<ViewTuple>& views, double truth) {
            return settlement_list(distribute({kind_of(function)}, budget, to_views(views), truth));
        },
        py::arg("function"), py::arg("budget"), py::arg("views"), py::arg("truth"));

    m.def(
        "error_payment",
        [](const std::vector<ViewTuple>& actual, const std::vector<ViewTuple>& ideal) {
            auto conv = [](const std::vector<ViewTuple>& in) {
                Settlement s;
                for (const auto& [p, a] : in) s.allocations.push_back({ProviderId{p}, a});
                return s;
            };
            return error_payment(conv(actual), conv(ideal));
        },
        py::arg("actual"), py::arg("ideal"));

    py::class_<Ledger>(m, "Ledger")
        .def(py::init([](double e_t, std::size_t min_trades, std::size_t k) {
                 LedgerOptions o;
                 o.error_threshold = e_t;
                 o.min_calibration_trades = min_trades;
                 o.k = k;
                 o.clock = logical_clock();
                 return Ledger(o);
             }),
             py::arg("e_t") = kDefaultErrorThreshold, py::arg("min_calibration_trades") = 10,
             py::arg("k") = kDefaultK)
        .def(
            "declare",
            [](Ledger& l, const std::string& mode, const std::string& commodity) {
                return l.declare(parse_mode(mode), commodity).value;
            },
            py::arg("mode"), py::arg("commodity") = "")
        .def(
            "calibrate",
            [](Ledger& l, const std::string& provider, const std::vector<std::pair<double, double>>& pairs) {
                std::vector<CalibrationPair> cp;
                for (const auto& [g, v] : pairs) cp.push_back({g, v});
                const auto& p = l.calibrate(ProviderId{provider}, cp);
                return py::make_tuple(p.error_dist().mean, p.error_dist().variance, p.calibrated);
            },
            py::arg("provider"), py::arg("pairs"))
        .def("submit_view",
             [](Ledger& l, std::uint64_t id, const std::string& provider, double value) {
                 switch (l.submit_view(TradeId{id}, ProviderId{provider}, value)) {
                     case Submission::accepted: return "accepted";
                     case Submission::duplicate: return "duplicate";
                     case Submission::uncalibrated: return "uncalibrated";
                 }
                 return "accepted";
             })
        .def(
            "evaluate",
            [](Ledger& l, std::uint64_t id, const std::string& strategy) {
                return l.evaluate(TradeId{id}, strategy_of(strategy));
            },
            py::arg("trade_id"), py::arg("strategy") = "IDCSW")
        .def("redeclare",
             [](Ledger& l, std::uint64_t id, const std::string& mode) {
                 return l.redeclare(TradeId{id}, parse_mode(mode)) == Redeclaration::accepted;
             })
        .def("confirm",
             [](Ledger& l, std::uint64_t id) {
                 const auto c = l.confirm(TradeId{id});
                 return py::make_tuple(c.truth, settlement_list(c.settlement));
             })
        .def("stage", [](const Ledger& l, std::uint64_t id) { return std::string(to_string(l.snapshot(TradeId{id}).stage)); })
        .def("log_ndjson", [](const Ledger& l) { return l.log().to_ndjson(); })
        .def("profiles_csv",
             [](const Ledger& l) {
                 std::ostringstream s;
                 l.write_profiles_csv(s);
                 return s.str();
             })
        .def_static(
            "replay",
            [](const std::string& ndjson, double e_t, std::size_t min_trades, std::size_t k) {
                LedgerOptions o;
                o.error_threshold = e_t;
                o.min_calibration_trades = min_trades;
                o.k = k;
                o.clock = logical_clock();
                return Ledger::replay(EventLog::from_ndjson(ndjson), o);
            },
            py::arg("ndjson"), py::arg("e_t") = kDefaultErrorThreshold, py::arg("min_calibration_trades") = 10,
            py::arg("k") = kDefaultK);

    m.def(
        "error_stats",
        [](const std::string& path, const std::string& truth) {
            py::dict out;
            for (const auto& [name, s] : derive_error_stats(fill_forward(load_csv(path)), truth)) {
                py::dict d;
                d["mean_abs_error"] = s.mean_abs_error;
                d["std_abs_error"] = s.std_abs_error;
                d["mean_signed_error"] = s.mean_signed_error;
                d["signed_variance"] = s.signed_variance;
                out[py::str(name)] = d;
            }
            return out;
        },
        py::arg("path"), py::arg("ground_truth"));

    m.def(
        "error_payment_grid",
        [](std::size_t mp, double mf, std::uint64_t seed, std::size_t repetitions) {
            ExperimentConfig c;
            c.malicious = mp;
            c.manipulation = mf;
            c.seed = seed;
            c.repetitions = repetitions;
            const auto run = run_error_payment_grid(c, gdp_synthetic_market());
            py::dict out;
            for (const auto& cell : run.cells) {
                out[py::make_tuple(std::string(to_string(cell.method)), std::string(to_string(cell.function)))] =
                    cell.mean();
            }
            return out;
        },
        py::arg("mp"), py::arg("mf") = 1.2, py::arg("seed") = 0, py::arg("repetitions") = 10,
        "Mean error payment per (method, function) on the synthetic GDP market.");

    m.def(
        "confidence_trajectory",
        [](double if_exponent, std::size_t mp, std::size_t budget, std::uint64_t seed) {
            ExperimentConfig c;
            c.malicious = mp;
            c.manipulation = 1.6;
            c.improvement_exponent = if_exponent;
            c.seed = seed;
            std::vector<std::pair<double, double>> out;
            for (const auto& p : run_confidence_trajectory(c, gdp_synthetic_market(), budget)) {
                out.emplace_back(p.cumulative_budget, p.confidence);
            }
            return out;
        },
        py::arg("if_exponent") = 0.1, py::arg("mp") = 3, py::arg("budget") = 30, py::arg("seed") = 0);
}
