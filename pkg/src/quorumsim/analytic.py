"""Semi-analytic engine.

Closed-form-free counterparts of the Monte Carlo estimates: conditional
means of the race winners, the mean functional time via Wald's identity,
and the full time-dependent probability of not being hacked, obtained from
a renewal-type restart equation.

The restart argument: the chain is un-hacked at time t iff the cycle in
progress is still functional or resetting at its current age.  Ages reset
whenever a reset completes, which happens at cycle boundaries; a cycle
completes (instead of ending in a hack) with probability 1 - p.  The
expected number of completed cycles by time s is therefore the renewal
function of the *completion-weighted* increment law

    F(s) = (1 - p) * P(detect-given-no-hack + reset <= s),

and G = F + F * G.  Weighting by 1 - p is what drives the curve to zero:
with the unweighted increment law the restart equation converges to a
positive constant instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConditioningError, InfiniteMeanError, ResolutionError
from .model import AttackModel, hack_probability
from .quadrature import adaptive_simpson

__all__ = [
    "RenewalGrid",
    "conditional_detect_mean",
    "conditional_hack_mean",
    "cycle_length_cdf",
    "functional_term",
    "instantaneous_prob",
    "mean_functional_time",
    "renewal_function",
    "renewal_residual",
    "resetting_term",
]

_TAIL_EPS = 1e-13
_DEFAULT_GRID_CELLS = 4096


def _integral_upper(model: AttackModel, eps: float = _TAIL_EPS) -> float:
    """Truncation point for the race integrals.

    Beyond the smaller of the detect-law and earliest-breach-law tail
    quantiles, one factor of the integrand is below ``eps``, so the
    neglected mass is at most ``eps`` times a finite mean.
    """
    u_detect = model.detect.quantile(1.0 - eps)
    u_hack = min(total.quantile(1.0 - eps) for total in model.hacker_totals())
    return min(u_detect, u_hack)


def _resolve_p(model: AttackModel, tol: float, cycle_hack_prob: Optional[float]) -> float:
    if cycle_hack_prob is None:
        return hack_probability(model, tol)
    p = float(cycle_hack_prob)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"cycle hack probability must lie in [0, 1], got {p!r}")
    return p


def conditional_detect_mean(
    model: AttackModel, tol: float = 1e-9, *, cycle_hack_prob: Optional[float] = None
) -> float:
    """Mean detection time given detection wins the race."""
    p = _resolve_p(model, tol, cycle_hack_prob)
    if p >= 1.0:
        raise ConditioningError("detection never wins the race (p = 1)")
    upper = _integral_upper(model)
    detect = model.detect

    def integrand(y: float) -> float:
        density = float(detect.pdf(y))
        if not math.isfinite(density):
            return 0.0  # only at y = 0, where y * pdf -> 0
        return y * density * float(model.min_hack_time_sf(y))

    return adaptive_simpson(integrand, 0.0, upper, tol) / (1.0 - p)


def conditional_hack_mean(
    model: AttackModel, tol: float = 1e-9, *, cycle_hack_prob: Optional[float] = None
) -> float:
    """Mean breach time given the breach wins the race."""
    p = _resolve_p(model, tol, cycle_hack_prob)
    if p <= 0.0:
        raise ConditioningError("the breach never wins the race (p = 0)")
    upper = _integral_upper(model)
    detect = model.detect

    def integrand(s: float) -> float:
        density = float(model.min_hack_time_pdf(s))
        if not math.isfinite(density):
            return 0.0  # only at s = 0, where s * pdf -> 0
        return s * density * float(detect.sf(s))

    return adaptive_simpson(integrand, 0.0, upper, tol) / p


def mean_functional_time(
    model: AttackModel, tol: float = 1e-9, *, cycle_hack_prob: Optional[float] = None
) -> float:
    """Expected time until the first successful hack.

    Wald's identity over the geometric number of completed cycles
    (failures-until-success convention, so E[cycles] = (1-p)/p):

        E[T] = (1-p)/p * (E[detect | detect wins] + E[reset]) + E[breach | breach wins]
    """
    p = _resolve_p(model, tol, cycle_hack_prob)
    if p <= 0.0:
        raise InfiniteMeanError("hack probability is zero; the mean functional time diverges")
    hack_term = conditional_hack_mean(model, tol, cycle_hack_prob=p)
    if p >= 1.0:
        return hack_term
    detect_term = conditional_detect_mean(model, tol, cycle_hack_prob=p)
    return (1.0 - p) / p * (detect_term + model.reset.mean()) + hack_term


def functional_term(model: AttackModel, t):
    """Probability the first cycle is still functional at age t."""
    return model.min_hack_time_sf(t) * model.detect.sf(t)


def resetting_term(model: AttackModel, t: float, tol: float = 1e-9) -> float:
    """Probability the first cycle is resetting at age t.

    Integrates P(reset > t - y) * P(breach > y) over the detection measure
    on [0, t], substituted through the detection quantile so densities never
    appear (robust to laws with unbounded density at zero).
    """
    t = float(t)
    if t < 0.0 or not math.isfinite(t):
        raise ValueError(f"time must be finite and nonnegative, got {t!r}")
    if t == 0.0:
        return 0.0
    detect = model.detect
    reset = model.reset
    cap = float(detect.cdf(t))
    if cap <= 0.0:
        return 0.0

    def integrand(u: float) -> float:
        y = min(detect.quantile(u), t)
        return float(reset.sf(t - y)) * float(model.min_hack_time_sf(y))

    return adaptive_simpson(integrand, 0.0, cap, tol)


@dataclass(frozen=True)
class RenewalGrid:
    """Uniform time grid with the cycle-increment CDF and renewal function.

    ``cycle_cdf`` is the proper CDF of one completed cycle's length
    (conditional detection time plus reset); ``completion_prob`` (= 1 - p)
    scales it to the sub-probability increment law actually renewed on, and
    ``g`` is the expected number of completed cycles by each grid time.
    """

    step: float
    horizon: float
    cycle_cdf: np.ndarray
    g: np.ndarray
    completion_prob: float

    def __post_init__(self):
        if self.step <= 0.0 or self.horizon <= 0.0:
            raise ValueError("step and horizon must be positive")
        if not 0.0 <= self.completion_prob <= 1.0:
            raise ValueError("completion_prob must lie in [0, 1]")
        for name, arr in (("cycle_cdf", self.cycle_cdf), ("g", self.g)):
            if arr[0] != 0.0:
                raise ValueError(f"{name} must start at 0")
            if np.any(np.diff(arr) < -1e-12):
                raise ValueError(f"{name} must be nondecreasing")
        if np.any(self.cycle_cdf > 1.0 + 1e-12):
            raise ValueError("cycle_cdf must stay within [0, 1]")

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.g.shape[0])


def _check_uniform_times(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("grid must be a 1-d array with at least two points")
    if times[0] != 0.0:
        raise ValueError("grid must start at 0")
    steps = np.diff(times)
    step = steps[0]
    if step <= 0.0 or not np.allclose(steps, step, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniformly spaced and increasing")
    return float(step)


def cycle_length_cdf(
    model: AttackModel,
    times,
    tol: float = 1e-9,
    *,
    cycle_hack_prob: Optional[float] = None,
) -> np.ndarray:
    """CDF of one completed cycle's length on a uniform grid.

    A completed cycle is a detection (conditioned on beating every breach)
    followed by a reset.  The convolution runs against increments of the
    detection measure with trapezoid cell weights, so laws with unbounded
    densities at zero are handled exactly as well as smooth ones.
    """
    times = np.asarray(times, dtype=float)
    step = _check_uniform_times(times)
    p = _resolve_p(model, tol, cycle_hack_prob)
    if p >= 1.0:
        raise ConditioningError("no cycle ever completes (p = 1)")
    n = times.size - 1
    sfz = np.asarray(model.min_hack_time_sf(times))
    d_fy = np.diff(np.asarray(model.detect.cdf(times)))
    # increments of the conditional detection law, trapezoid-in-measure
    d_fy1 = d_fy * 0.5 * (sfz[:-1] + sfz[1:]) / (1.0 - p)
    fw = np.asarray(model.reset.cdf(times))
    d_fw = np.diff(fw)
    # mass concentrated in the first cell is a legitimate instant-reset or
    # instant-detect limit; concentration in any later cell is unresolved
    worst = max(float(d_fy1[1:].max(initial=0.0)), float(d_fw[1:].max(initial=0.0)))
    if worst > 0.5:
        raise ResolutionError(
            f"grid step {step:.3g} too coarse: a cycle-increment law puts "
            f"{worst:.3g} of its mass in one interior cell (limit 0.5)"
        )
    cell_avg = 0.5 * (fw[:-1] + fw[1:])
    conv = np.convolve(d_fy1, cell_avg)[:n]
    return np.clip(np.concatenate(([0.0], conv)), 0.0, 1.0)


def _solve_renewal(defective_cdf: np.ndarray, step: float) -> np.ndarray:
    """Forward solve of G = F + F*G with trapezoid convolution weights."""
    d_f = np.diff(defective_cdf)
    if d_f.size and float(d_f.max()) > 0.5:
        raise ResolutionError(
            f"grid step {step:.3g} too coarse: the increment CDF jumps by "
            f"{float(d_f.max()):.3g} in one cell (limit 0.5)"
        )
    n = defective_cdf.shape[0] - 1
    g = np.zeros(n + 1)
    denom = 1.0 - 0.5 * (d_f[0] if d_f.size else 0.0)
    for i in range(1, n + 1):
        right = np.dot(d_f[:i], g[i - 1 :: -1])
        left = np.dot(d_f[1:i], g[i - 1 : 0 : -1]) if i > 1 else 0.0
        g[i] = (defective_cdf[i] + 0.5 * (right + left)) / denom
    return g


def renewal_function(
    model: AttackModel,
    step: Optional[float] = None,
    horizon: Optional[float] = None,
    tol: float = 1e-9,
) -> RenewalGrid:
    """Renewal grid for the completed-cycle process.

    Defaults: horizon is 20 times the mean functional time (a pessimistic
    bound on where anything still happens) and the step divides it into
    4096 cells.
    """
    p = hack_probability(model, tol)
    if horizon is None:
        horizon = 20.0 * mean_functional_time(model, tol, cycle_hack_prob=p)
    horizon = float(horizon)
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if step is None:
        step = horizon / _DEFAULT_GRID_CELLS
    step = float(step)
    if step <= 0.0:
        raise ValueError("step must be positive")
    n = max(2, math.ceil(horizon / step))
    times = step * np.arange(n + 1)
    cycle = cycle_length_cdf(model, times, tol, cycle_hack_prob=p)
    g = _solve_renewal((1.0 - p) * cycle, step)
    return RenewalGrid(
        step=step,
        horizon=float(times[-1]),
        cycle_cdf=cycle,
        g=g,
        completion_prob=1.0 - p,
    )


def renewal_residual(grid: RenewalGrid) -> float:
    """Max gridpoint residual of G = F + F*G (trapezoid convolution).

    Recomputes the discrete operator through an independent convolution
    path; a healthy solve keeps this within a few steps' worth of error.
    """
    defective = grid.completion_prob * grid.cycle_cdf
    d_f = np.diff(defective)
    g = grid.g
    n = g.shape[0] - 1
    cell_avg = 0.5 * (g[:-1] + g[1:])
    conv = np.convolve(d_f, cell_avg)[:n]
    residual = g[1:] - defective[1:] - conv
    return float(np.abs(residual).max(initial=0.0))


def _resetting_on_grid(model: AttackModel, times: np.ndarray) -> np.ndarray:
    """Resetting-at-age probability on every gridpoint (trapezoid-in-measure)."""
    n = times.size - 1
    sfz = np.asarray(model.min_hack_time_sf(times))
    sfw = np.asarray(model.reset.sf(times))
    d_fy = np.diff(np.asarray(model.detect.cdf(times)))
    u = d_fy * sfz[:-1]
    v = d_fy * sfz[1:]
    conv_left = np.convolve(u, sfw[1:])[:n]
    conv_right = np.convolve(v, sfw)[:n]
    return np.concatenate(([0.0], 0.5 * (conv_left + conv_right)))


def instantaneous_prob(
    model: AttackModel,
    t_grid,
    *,
    grid: Optional[RenewalGrid] = None,
    step: Optional[float] = None,
    horizon: Optional[float] = None,
    tol: float = 1e-9,
) -> np.ndarray:
    """Probability of not being hacked at each requested time.

    Solves the restart equation P = (A + B) + (A + B) * dG on the renewal
    grid (A: functional at age, B: resetting at age) and interpolates to
    ``t_grid``.  Values are clamped to [0, 1].  Discretization error is
    O(step**2); halving the step should move values by no more than
    10 * step**2.

    When no grid is supplied one is built with horizon max(t_grid) and the
    default cell count; explicitly supplied horizons (or grids) must cover
    the requested times.
    """
    t_arr = np.asarray(t_grid, dtype=float)
    if t_arr.ndim != 1 or t_arr.size == 0:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0.0):
        raise ValueError("t_grid times must be finite and nonnegative")
    if np.any(np.diff(t_arr) < 0):
        raise ValueError("t_grid must be ascending")
    t_max = float(t_arr[-1])
    if grid is None:
        if horizon is None:
            horizon = t_max if t_max > 0.0 else 1.0
        elif t_max > horizon * (1.0 + 1e-12):
            raise ValueError(f"t_grid extends beyond the horizon {horizon!r}")
        grid = renewal_function(model, step=step, horizon=horizon, tol=tol)
    elif t_max > grid.horizon * (1.0 + 1e-12):
        raise ValueError(f"t_grid extends beyond the grid horizon {grid.horizon!r}")
    times = grid.times
    ab = np.asarray(functional_term(model, times)) + _resetting_on_grid(model, times)
    d_g = np.diff(grid.g)
    cell_avg = 0.5 * (ab[:-1] + ab[1:])
    n = times.size - 1
    p_curve = ab + np.concatenate(([0.0], np.convolve(d_g, cell_avg)[:n]))
    p_curve = np.clip(p_curve, 0.0, 1.0)
    return np.interp(t_arr, times, p_curve)
