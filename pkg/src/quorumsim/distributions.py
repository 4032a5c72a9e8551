"""Waiting-time laws and the gamma-sum series.

Three parametric families cover every input the attack model accepts:
exponential and gamma (rate convention) for hacking, detection and reset
times, plus Weibull for detection times.  Weibull keeps the (scale, shape)
form, so its density reads (shape/scale)(t/scale)^(shape-1) exp(-(t/scale)^shape).

All laws expose ``pdf``/``cdf``/``sf``/``mean``/``quantile`` plus ``sample``,
which consumes standard uniforms from any object with a ``random()`` method
(a numpy ``Generator`` works, as does :class:`~quorumsim.streams.ScriptedStream`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Union

import numpy as np
from scipy import special

from .errors import ConvergenceError

__all__ = [
    "Exponential",
    "Gamma",
    "GammaSumSeriesParams",
    "Law",
    "UniformSource",
    "Weibull",
    "gamma_sum_cdf",
    "gamma_sum_mixture_weights",
    "regularized_lower_gamma",
]


class UniformSource(Protocol):
    """Anything producing standard uniforms in [0, 1)."""

    def random(self) -> float: ...


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def _as_time(t):
    """Validate time input, returning (array, was_scalar)."""
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("time values must be finite")
    if np.any(arr < 0.0):
        raise ValueError("time values must be nonnegative")
    return arr, arr.ndim == 0


def _ret(out, scalar: bool):
    return float(out) if scalar else out


def _check_prob(q: float) -> float:
    q = float(q)
    if not 0.0 <= q < 1.0:
        raise ValueError(f"probability level must lie in [0, 1), got {q!r}")
    return q


def regularized_lower_gamma(a, x):
    """Regularized lower incomplete gamma function P(a, x).

    Equals the CDF of a unit-rate gamma law with shape ``a`` at ``x``; in
    particular P(1, x) = 1 - exp(-x).
    """
    a = _positive("shape", a)
    arr, scalar = _as_time(x)
    return _ret(special.gammainc(a, arr), scalar)


@dataclass(frozen=True)
class Exponential:
    """Exponential law with the given rate (mean 1/rate)."""

    rate: float

    def __post_init__(self):
        _positive("rate", self.rate)

    def pdf(self, t):
        arr, scalar = _as_time(t)
        return _ret(self.rate * np.exp(-self.rate * arr), scalar)

    def cdf(self, t):
        arr, scalar = _as_time(t)
        return _ret(-np.expm1(-self.rate * arr), scalar)

    def sf(self, t):
        arr, scalar = _as_time(t)
        return _ret(np.exp(-self.rate * arr), scalar)

    def mean(self) -> float:
        return 1.0 / self.rate

    def quantile(self, q: float) -> float:
        return -math.log1p(-_check_prob(q)) / self.rate

    def sample(self, stream: UniformSource) -> float:
        """Inverse-CDF draw; consumes exactly one uniform."""
        return -math.log1p(-stream.random()) / self.rate


@dataclass(frozen=True)
class Gamma:
    """Gamma law with shape and rate parameters (mean shape/rate)."""

    shape: float
    rate: float

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("rate", self.rate)

    def pdf(self, t):
        arr, scalar = _as_time(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(
                self.shape * math.log(self.rate)
                + (self.shape - 1.0) * np.log(arr)
                - self.rate * arr
                - special.gammaln(self.shape)
            )
        if np.any(arr == 0.0):
            if self.shape < 1.0:
                at_zero = math.inf
            elif self.shape == 1.0:
                at_zero = self.rate
            else:
                at_zero = 0.0
            out = np.where(arr == 0.0, at_zero, out)
        return _ret(out, scalar)

    def cdf(self, t):
        arr, scalar = _as_time(t)
        return _ret(special.gammainc(self.shape, self.rate * arr), scalar)

    def sf(self, t):
        arr, scalar = _as_time(t)
        return _ret(special.gammaincc(self.shape, self.rate * arr), scalar)

    def mean(self) -> float:
        return self.shape / self.rate

    def quantile(self, q: float) -> float:
        return float(special.gammaincinv(self.shape, _check_prob(q))) / self.rate

    def sample(self, stream: UniformSource) -> float:
        """Squeeze/rejection draw (Marsaglia-Tsang).

        Consumes a variable number of uniforms: three per rejection round
        (two for the Box-Muller normal, one for the acceptance test), and
        one extra boost uniform when shape < 1.  Callers that need stream
        alignment across runs must key streams per replication.
        """
        return _gamma_variate(self.shape, stream) / self.rate


@dataclass(frozen=True)
class Weibull:
    """Weibull law with scale and shape (mean scale * gamma(1 + 1/shape))."""

    scale: float
    shape: float

    def __post_init__(self):
        _positive("scale", self.scale)
        _positive("shape", self.shape)

    def pdf(self, t):
        arr, scalar = _as_time(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = arr / self.scale
            out = (self.shape / self.scale) * z ** (self.shape - 1.0) * np.exp(-(z**self.shape))
        if np.any(arr == 0.0):
            if self.shape < 1.0:
                at_zero = math.inf
            elif self.shape == 1.0:
                at_zero = 1.0 / self.scale
            else:
                at_zero = 0.0
            out = np.where(arr == 0.0, at_zero, out)
        return _ret(out, scalar)

    def cdf(self, t):
        arr, scalar = _as_time(t)
        return _ret(-np.expm1(-((arr / self.scale) ** self.shape)), scalar)

    def sf(self, t):
        arr, scalar = _as_time(t)
        return _ret(np.exp(-((arr / self.scale) ** self.shape)), scalar)

    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def quantile(self, q: float) -> float:
        return self.scale * (-math.log1p(-_check_prob(q))) ** (1.0 / self.shape)

    def sample(self, stream: UniformSource) -> float:
        """Inverse-CDF draw; consumes exactly one uniform."""
        return self.scale * (-math.log1p(-stream.random())) ** (1.0 / self.shape)


Law = Union[Exponential, Gamma, Weibull]


def _standard_normal(stream: UniformSource) -> float:
    # Box-Muller; exactly two uniforms per normal keeps consumption countable.
    u1 = 1.0 - stream.random()
    u2 = stream.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

def _gamma_variate(shape: float, stream: UniformSource) -> float:
    """Unit-rate gamma variate via the Marsaglia-Tsang squeeze."""
    if shape < 1.0:
        boost = (1.0 - stream.random()) ** (1.0 / shape)
        return _gamma_variate(shape + 1.0, stream) * boost
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _standard_normal(stream)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = stream.random()
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if u <= 0.0 or math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v


@dataclass(frozen=True)
class GammaSumSeriesParams:
    """Parameters of the gamma-mixture expansion for a sum of two
    independent gamma variates.

    The sum's law is a countable mixture of gamma laws sharing the larger
    rate; the mixture weights are nonnegative and sum to one, which yields a
    rigorous truncation bound: once the accumulated weight exceeds
    1 - tol, the neglected CDF mass is below tol.
    """

    shape1: float
    rate1: float
    shape2: float
    rate2: float
    tol: float = 1e-10
    max_terms: int = 10_000

    def __post_init__(self):
        _positive("shape1", self.shape1)
        _positive("rate1", self.rate1)
        _positive("shape2", self.shape2)
        _positive("rate2", self.rate2)
        _positive("tol", self.tol)
        if int(self.max_terms) < 1:
            raise ValueError("max_terms must be a positive integer")


def _mixture_weights(params: GammaSumSeriesParams):
    """Mixture weights until their sum reaches 1 - tol.

    Returns (weights, converged).  The recursion is run directly on the
    weights (base weight times the usual delta coefficients), which keeps
    every intermediate in [0, 1] and immune to overflow.
    """
    r_star = max(params.rate1, params.rate2)
    q1 = 1.0 - params.rate1 / r_star
    q2 = 1.0 - params.rate2 / r_star
    w0 = (params.rate1 / r_star) ** params.shape1 * (params.rate2 / r_star) ** params.shape2
    weights = [w0]
    cum = w0
    coeff = []  # coeff[i-1] = shape1*q1**i + shape2*q2**i
    pow1 = 1.0
    pow2 = 1.0
    while cum < 1.0 - params.tol:
        if len(weights) >= int(params.max_terms):
            return np.asarray(weights), False
        pow1 *= q1
        pow2 *= q2
        coeff.append(params.shape1 * pow1 + params.shape2 * pow2)
        n = len(weights)
        nxt = sum(coeff[i - 1] * weights[n - i] for i in range(1, n + 1)) / n
        weights.append(nxt)
        cum += nxt
    return np.asarray(weights), True


def gamma_sum_mixture_weights(params: GammaSumSeriesParams) -> np.ndarray:
    """Truncated mixture weights; raises when the term cap is hit first."""
    weights, converged = _mixture_weights(params)
    if not converged:
        raise ConvergenceError(
            f"gamma-sum series needed more than {params.max_terms} terms "
            f"(accumulated weight {weights.sum():.6g})",
            estimate=float(weights.sum()),
            terms=len(weights),
        )
    return weights


def gamma_sum_cdf(params: GammaSumSeriesParams, t):
    """CDF of the sum of two independent gamma variates at time ``t``.

    Series truncated once the neglected mixture mass falls below
    ``params.tol``; the result is clamped to [0, 1].
    """
    arr, scalar = _as_time(t)
    weights, converged = _mixture_weights(params)
    r_star = max(params.rate1, params.rate2)
    rho = params.shape1 + params.shape2
    orders = rho + np.arange(len(weights), dtype=float)
    comps = special.gammainc(orders[:, None], r_star * np.atleast_1d(arr)[None, :])
    values = np.clip(weights @ comps, 0.0, 1.0)
    out = float(values[0]) if scalar else values.reshape(np.shape(arr))
    if not converged:
        raise ConvergenceError(
            f"gamma-sum series needed more than {params.max_terms} terms "
            f"(accumulated weight {weights.sum():.6g})",
            estimate=out,
            terms=len(weights),
        )
    return out
