"""Cost-benefit layer: expected net revenue and the optimum quorum size.

Revenue accrues while the chain is functional, running costs accrue over
the same uptime, and reset costs accrue during resets.  Expected totals
follow from Wald's identity over the completed cycles; the per-unit-time
figure divides by the mean functional time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .analytic import conditional_detect_mean, conditional_hack_mean, mean_functional_time
from .errors import InfiniteMeanError
from .model import AttackModel, hack_probability
from .montecarlo import simulate_replications

__all__ = [
    "CurvePoint",
    "EconSpec",
    "OptimizeResult",
    "RateExpr",
    "expected_net_revenue_rate",
    "expected_total_net_revenue",
    "optimize_m",
]


@dataclass(frozen=True)
class RateExpr:
    """Power-law-plus-affine rate: value(m) = a * m**b + c."""

    a: float
    b: float
    c: float = 0.0

    def value(self, m: int) -> float:
        m = int(m)
        if m < 1:
            raise ValueError(f"quorum size must be at least 1, got {m}")
        out = self.a * m**self.b + self.c
        if not math.isfinite(out):
            raise ValueError(f"rate expression not finite at m={m}")
        return out


@dataclass(frozen=True)
class EconSpec:
    """Per-unit-time revenue, reset cost and running cost."""

    revenue: RateExpr
    reset_cost: RateExpr
    run_cost: RateExpr


def _uptime(model: AttackModel, tol: float, p: float) -> float:
    """Expected functional (revenue-earning) time until the hack."""
    hack_term = conditional_hack_mean(model, tol, cycle_hack_prob=p)
    if p >= 1.0:
        return hack_term
    detect_term = conditional_detect_mean(model, tol, cycle_hack_prob=p)
    return (1.0 - p) / p * detect_term + hack_term


def expected_total_net_revenue(model: AttackModel, econ: EconSpec, tol: float = 1e-9) -> float:
    """Expected net revenue accumulated until the first successful hack."""
    p = hack_probability(model, tol)
    if p <= 0.0:
        raise InfiniteMeanError("hack probability is zero; the horizon is infinite")
    m = model.quorum
    margin = econ.revenue.value(m) - econ.run_cost.value(m)
    reset_burden = (1.0 - p) / p * model.reset.mean() * econ.reset_cost.value(m)
    return _uptime(model, tol, p) * margin - reset_burden


def expected_net_revenue_rate(model: AttackModel, econ: EconSpec, tol: float = 1e-9) -> float:
    """Expected net revenue per unit of time."""
    return expected_total_net_revenue(model, econ, tol) / mean_functional_time(model, tol)


@dataclass(frozen=True)
class CurvePoint:
    """One sweep point: quorum size, net-revenue rate, MC stderr if any."""

    m: int
    value: float
    stderr: Optional[float]
    tied: bool


@dataclass(frozen=True)
class OptimizeResult:
    """Argmax over quorum sizes plus the full exported curve."""

    best_m: int
    best_value: float
    points: tuple[CurvePoint, ...]
    engine: str


def _mc_net_revenue_rate(
    model: AttackModel,
    econ: EconSpec,
    n_reps: int,
    seed: int,
    workers: int,
) -> tuple[float, float]:
    """Ratio estimate of net revenue per unit time with a delta-method stderr."""
    outcomes = simulate_replications(model, n_reps, seed, workers=workers)
    m = model.quorum
    margin = econ.revenue.value(m) - econ.run_cost.value(m)
    c1 = econ.reset_cost.value(m)
    uptime = np.fromiter(
        (o.detect_total + o.final_hack_time for o in outcomes), dtype=float, count=n_reps
    )
    resets = np.fromiter((o.reset_total for o in outcomes), dtype=float, count=n_reps)
    totals = uptime + resets
    tnr = uptime * margin - resets * c1
    mean_total = totals.mean()
    rate = float(tnr.mean() / mean_total)
    resid = tnr - rate * totals
    stderr = float(resid.std(ddof=1) / math.sqrt(n_reps) / mean_total)
    return rate, stderr


def optimize_m(
    model: AttackModel,
    econ: EconSpec,
    m_values: Sequence[int],
    engine: str = "analytic",
    *,
    n_reps: int = 30_000,
    seed: int = 0,
    workers: int = 1,
    tol: float = 1e-9,
) -> OptimizeResult:
    """Evaluate the net-revenue rate at every quorum size and pick the best.

    Ties break toward the smallest quorum (cheapest hardware).  With the
    Monte Carlo engine every point reports a standard error, and points
    within two combined standard errors of the winner are flagged as
    statistically tied.
    """
    ms = [int(m) for m in m_values]
    if not ms:
        raise ValueError("m_values must be nonempty")
    if any(m < 1 for m in ms):
        raise ValueError("every quorum size must be at least 1")
    if engine not in ("analytic", "mc"):
        raise ValueError(f"unknown engine {engine!r}")
    values: list[float] = []
    errors: list[Optional[float]] = []
    for m in ms:
        arm = replace(model, quorum=m)
        try:
            if engine == "analytic":
                values.append(expected_net_revenue_rate(arm, econ, tol))
                errors.append(None)
            else:
                rate, stderr = _mc_net_revenue_rate(arm, econ, n_reps, seed, workers)
                values.append(rate)
                errors.append(stderr)
        except Exception as exc:
            raise type(exc)(f"evaluation failed at m={m}: {exc}") from exc
    best_idx = 0
    for i, v in enumerate(values):
        if v > values[best_idx]:
            best_idx = i
    points = []
    for i, m in enumerate(ms):
        tied = False
        if engine == "mc" and i != best_idx:
            spread = math.hypot(errors[i], errors[best_idx])
            tied = abs(values[i] - values[best_idx]) <= 2.0 * spread
        points.append(CurvePoint(m=m, value=values[i], stderr=errors[i], tied=tied))
    return OptimizeResult(
        best_m=ms[best_idx],
        best_value=values[best_idx],
        points=tuple(points),
        engine=engine,
    )
