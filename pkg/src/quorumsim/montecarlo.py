"""Seeded Monte Carlo engine.

Each replication simulates the chain from a fresh start to its first
successful hack: cycles of (breach race, detection, reset) repeat until a
breach wins the race.  Replication ``i`` under ``seed`` always consumes the
substream keyed (seed, i), so estimates are bit-identical however the work
is scheduled.  Sweeps that share a seed therefore share randomness across
arms (common random numbers), which sharpens monotonicity comparisons.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import UniformSource
from .errors import RunawayError
from .model import AttackModel
from .streams import substream

__all__ = [
    "CycleDraw",
    "DEFAULT_MAX_CYCLES",
    "EstimateWithError",
    "ReplicationOutcome",
    "draw_cycle",
    "estimate_cycle_hack_prob",
    "estimate_mean_functional_time",
    "estimate_survival_curve",
    "simulate_functional_time",
    "simulate_replications",
    "survival_curve_from_outcomes",
]

DEFAULT_MAX_CYCLES = 10_000_000


@dataclass(frozen=True)
class CycleDraw:
    """One cycle's draws: earliest breach time, detection time, reset time.

    The reset time is drawn in every cycle (whether or not it is consumed)
    so that cycle draw counts stay aligned across sweep arms sharing a
    stream.
    """

    hack_time: float
    detect_time: float
    reset_time: float
    hacked: bool

    def __post_init__(self):
        if self.hacked != (self.hack_time < self.detect_time):
            raise ValueError("hacked flag must equal hack_time < detect_time")


@dataclass(frozen=True)
class ReplicationOutcome:
    """One simulated history, ending at the first successful hack.

    ``cycles`` counts the detected-and-reset cycles before the hack;
    ``functional_time`` is detect_total + reset_total + final_hack_time.
    """

    cycles: int
    functional_time: float
    final_hack_time: float
    detect_total: float
    reset_total: float


@dataclass(frozen=True)
class EstimateWithError:
    """Sample mean with its standard error (sample std / sqrt(n))."""

    mean: float
    stderr: float
    n: int
    seed: int


class _CycleSampler:
    """Per-model draw loop with samplers bound once (hot path)."""

    __slots__ = ("quorum", "hacker_samples", "detect_sample", "reset_sample")

    def __init__(self, model: AttackModel):
        self.quorum = model.quorum
        self.hacker_samples = tuple(law.sample for law in model.hackers)
        self.detect_sample = model.detect.sample
        self.reset_sample = model.reset.sample

    def draw(self, stream: UniformSource) -> tuple[float, float, float]:
        quorum = self.quorum
        z = math.inf
        for sample in self.hacker_samples:
            total = 0.0
            for _ in range(quorum):
                total += sample(stream)
            if total < z:
                z = total
        return z, self.detect_sample(stream), self.reset_sample(stream)


def draw_cycle(model: AttackModel, stream: UniformSource) -> CycleDraw:
    """Draw one cycle.

    Consumption order: for each hacker in turn, its quorum-many breach
    draws (summed); then the detection draw; then the reset draw.  The
    earliest breach time is the minimum of the per-hacker sums.
    """
    z, y, w = _CycleSampler(model).draw(stream)
    return CycleDraw(hack_time=z, detect_time=y, reset_time=w, hacked=z < y)


def simulate_functional_time(
    model: AttackModel,
    stream: UniformSource,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> ReplicationOutcome:
    """Run cycles until a breach wins; accumulate the pre-hack timeline."""
    return _simulate_one(_CycleSampler(model), stream, max_cycles)


def _simulate_one(
    sampler: _CycleSampler, stream: UniformSource, max_cycles: int
) -> ReplicationOutcome:
    detect_total = 0.0
    reset_total = 0.0
    cycles = 0
    draw = sampler.draw
    while True:
        z, y, w = draw(stream)
        if z < y:
            return ReplicationOutcome(
                cycles=cycles,
                functional_time=detect_total + reset_total + z,
                final_hack_time=z,
                detect_total=detect_total,
                reset_total=reset_total,
            )
        detect_total += y
        reset_total += w
        cycles += 1
        if cycles >= max_cycles:
            raise RunawayError(
                f"exceeded {max_cycles} cycles without a hack; "
                "the configuration's hack probability is effectively zero"
            )


def _map_indices(n: int, workers: int, fn: Callable[[int], object]) -> list:
    """Apply fn to 0..n-1, optionally on a thread pool, preserving order."""
    if workers <= 1:
        return [fn(i) for i in range(n)]
    chunk = max(1, -(-n // (workers * 4)))
    spans = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda span: [fn(i) for i in range(span[0], span[1])], spans)
        return [item for part in parts for item in part]


def simulate_replications(
    model: AttackModel,
    n_reps: int,
    seed: int = 0,
    *,
    workers: int = 1,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    stream_factory: Optional[Callable[[int], UniformSource]] = None,
) -> list[ReplicationOutcome]:
    """Independent replications with per-index substreams.

    ``stream_factory`` overrides the substream map (used by tests to force
    outcomes); the default is ``substream(seed, index)``.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be positive")
    factory = stream_factory if stream_factory is not None else (lambda i: substream(seed, i))
    sampler = _CycleSampler(model)
    return _map_indices(
        n_reps, workers, lambda i: _simulate_one(sampler, factory(i), max_cycles)
    )


def _mean_estimate(values: np.ndarray, seed: int) -> EstimateWithError:
    n = values.shape[0]
    return EstimateWithError(
        mean=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(n)),
        n=n,
        seed=seed,
    )


def estimate_mean_functional_time(
    model: AttackModel,
    n_reps: int,
    seed: int = 0,
    *,
    workers: int = 1,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    stream_factory: Optional[Callable[[int], UniformSource]] = None,
) -> EstimateWithError:
    """Sample mean and standard error of the functional time."""
    if n_reps < 2:
        raise ValueError("n_reps must be at least 2")
    outcomes = simulate_replications(
        model, n_reps, seed, workers=workers, max_cycles=max_cycles, stream_factory=stream_factory
    )
    values = np.fromiter((o.functional_time for o in outcomes), dtype=float, count=n_reps)
    return _mean_estimate(values, seed)


def survival_curve_from_outcomes(
    outcomes: Sequence[ReplicationOutcome], t_grid, seed: int = 0
) -> list[EstimateWithError]:
    """Per-t fraction of replications whose pre-hack timeline exceeds t.

    Functional and resetting intervals both count as not hacked, so each
    replication answers every grid point from its single trajectory; the
    curve is exactly nonincreasing in t within one seed.
    """
    t_arr = np.asarray(t_grid, dtype=float)
    if t_arr.ndim != 1 or t_arr.size == 0:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if np.any(np.diff(t_arr) < 0):
        raise ValueError("t_grid must be ascending")
    totals = np.fromiter((o.functional_time for o in outcomes), dtype=float, count=len(outcomes))
    n = totals.shape[0]
    estimates = []
    for t in t_arr:
        alive = totals > t
        phat = float(alive.mean())
        var = phat * (1.0 - phat) * n / (n - 1) if n > 1 else 0.0
        estimates.append(
            EstimateWithError(mean=phat, stderr=math.sqrt(var / n), n=n, seed=seed)
        )
    return estimates


def estimate_survival_curve(
    model: AttackModel,
    t_grid,
    n_reps: int,
    seed: int = 0,
    *,
    workers: int = 1,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    stream_factory: Optional[Callable[[int], UniformSource]] = None,
) -> list[EstimateWithError]:
    """Estimated probability of not being hacked by each grid time."""
    if n_reps < 2:
        raise ValueError("n_reps must be at least 2")
    outcomes = simulate_replications(
        model, n_reps, seed, workers=workers, max_cycles=max_cycles, stream_factory=stream_factory
    )
    return survival_curve_from_outcomes(outcomes, t_grid, seed)


def estimate_cycle_hack_prob(
    model: AttackModel,
    n_reps: int,
    seed: int = 0,
    *,
    workers: int = 1,
    stream_factory: Optional[Callable[[int], UniformSource]] = None,
) -> EstimateWithError:
    """Fraction of independent single-cycle draws ending in a breach."""
    if n_reps < 2:
        raise ValueError("n_reps must be at least 2")
    factory = stream_factory if stream_factory is not None else (lambda i: substream(seed, i))
    sampler = _CycleSampler(model)

    def one(i: int) -> float:
        z, y, _ = sampler.draw(factory(i))
        return 1.0 if z < y else 0.0

    values = np.fromiter(_map_indices(n_reps, workers, one), dtype=float, count=n_reps)
    return _mean_estimate(values, seed)
