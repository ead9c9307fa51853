"""Truth estimation, payment and trading ledger for imprecise digital commodities."""

from ._idcs import (
    Error,
    Ledger,
    confidence_trajectory,
    distribute,
    error_payment,
    error_payment_grid,
    error_stats,
    estimate_truth,
    idcsw_weights,
    interval_prob,
    normal_cdf,
)

__all__ = [
    "Error",
    "Ledger",
    "confidence_trajectory",
    "distribute",
    "error_payment",
    "error_payment_grid",
    "error_stats",
    "estimate_truth",
    "idcsw_weights",
    "interval_prob",
    "normal_cdf",
]
