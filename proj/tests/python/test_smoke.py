import math
import os
import pathlib

import pytest

import idcs

SOURCE = pathlib.Path(os.environ.get("IDCS_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
FIXTURE = SOURCE / "data" / "gdp_synthetic.csv"


def test_normal_cdf_and_interval():
    assert idcs.normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert idcs.normal_cdf(1.0) == pytest.approx(0.5 * (1 + math.erf(1 / math.sqrt(2))), abs=1e-7)
    assert idcs.interval_prob(0.0, 1.0) == pytest.approx(0.682689, abs=1e-6)
    with pytest.raises(idcs.Error):
        idcs.interval_prob(0.0, 1.0, e_t=0.0)


def test_idcsw_weights_favor_precise_providers():
    w = idcs.idcsw_weights([("a", 0.0, 0.25), ("b", 0.0, 4.0)])
    assert sum(w.values()) == pytest.approx(1.0)
    assert w["a"] > w["b"]


def test_estimate_truth():
    profiles = [("p0", 0.0, 1.0), ("p1", 0.0, 1.0)]
    est = idcs.estimate_truth("IDCSW", [("p0", 4.0), ("p1", 6.0)], profiles)
    assert est["truth"] == pytest.approx(5.0)
    assert 0.0 < est["confidence"] < 1.0
    assert idcs.estimate_truth("Median", [("p0", 4.0), ("p1", 6.0)], profiles)["truth"] == pytest.approx(5.0)
    with pytest.raises(idcs.Error):
        idcs.estimate_truth("Oracle", [("p0", 4.0)], profiles)


def test_distribute_conserves_budget():
    views = [("a", 1.0), ("b", 2.0), ("c", 4.0)]
    for fn in ("TopOne", "TopThreeInverseDistance", "AllInverseSquare"):
        pay = dict(idcs.distribute(fn, 1.0, views, 1.5))
        assert sum(pay.values()) == pytest.approx(1.0, abs=1e-12)
    top = dict(idcs.distribute("TopOne", 1.0, views, 1.5))
    assert top["a"] == pytest.approx(0.5) and top["b"] == pytest.approx(0.5)
    assert idcs.error_payment([("a", 0.8), ("b", 0.2)], [("a", 1.0), ("b", 0.0)]) == pytest.approx(0.4)


def test_ledger_round_trip_and_replay():
    ledger = idcs.Ledger(min_calibration_trades=2)
    ledger.calibrate("a", [(1.0, 1.1), (2.0, 1.9), (3.0, 3.2)])
    ledger.calibrate("b", [(1.0, 0.5), (2.0, 2.8), (3.0, 2.0)])
    trade = ledger.declare("inf:1:TopOne", "gdp")
    assert ledger.submit_view(trade, "a", 10.0) == "accepted"
    assert ledger.submit_view(trade, "a", 10.0) == "duplicate"
    assert ledger.submit_view(trade, "z", 10.0) == "uncalibrated"
    assert ledger.submit_view(trade, "b", 11.0) == "accepted"
    cl = ledger.evaluate(trade)
    assert 0.0 < cl <= 1.0
    truth, pay = ledger.confirm(trade)
    assert 10.0 <= truth <= 11.0
    assert sum(a for _, a in pay) == pytest.approx(1.0, abs=1e-9)
    assert ledger.stage(trade) == "Settled"

    log = ledger.log_ndjson()
    assert idcs.Ledger.replay(log, min_calibration_trades=2).log_ndjson() == log
    with pytest.raises(idcs.Error):
        idcs.Ledger.replay(log.replace('"Settled"', '"Bogus"'), min_calibration_trades=2)


def test_error_stats_on_fixture():
    stats = idcs.error_stats(str(FIXTURE), "GDP_PA")
    assert len(stats) == 12
    for s in stats.values():
        assert s["mean_abs_error"] >= 0.0
        assert s["signed_variance"] >= 0.0


def test_experiments_are_deterministic():
    a = idcs.error_payment_grid(3, seed=1, repetitions=3)
    assert a == idcs.error_payment_grid(3, seed=1, repetitions=3)
    assert len(a) == 15
    assert all(v >= 0.0 for v in a.values())

    t = idcs.confidence_trajectory(0.2, mp=3, budget=5, seed=2)
    assert len(t) == 6
    assert t == idcs.confidence_trajectory(0.2, mp=3, budget=5, seed=2)
    assert all(0.0 <= cl <= 1.0 for _, cl in t)
