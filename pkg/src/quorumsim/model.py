"""The attack race on a quorum-replicated chain.

A chain of ``n`` identical nodes stays functional until one of ``k``
independent hackers breaches a quorum of ``m`` nodes before the monitoring
team detects the attack.  Each hacker's per-node breach times are iid, so
the earliest possible breach is the minimum over hackers of an m-fold sum.
Detection at time Y (before any breach) triggers a reset of random length W
that forfeits all attacker progress.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .distributions import Exponential, Gamma, Law, Weibull, _as_time, _ret
from .errors import UnsupportedFamilyError
from .quadrature import adaptive_simpson

__all__ = [
    "AttackMode",
    "AttackModel",
    "hack_probability",
    "limiting_functional_probability",
    "quorum_size",
    "transition_matrix",
]

AttackMode = Literal["destructive", "ransom"]

# Detection-law mass left outside the truncated integration support.
_TAIL_EPS = 1e-12


def quorum_size(n: int, mode: AttackMode = "destructive") -> int:
    """Number of nodes a hacker must breach.

    A destructive attack (data alteration) needs a majority, floor(n/2) + 1;
    a ransom attack (data lockout) needs every node.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"node count must be at least 2, got {n}")
    if mode == "destructive":
        return n // 2 + 1
    if mode == "ransom":
        return n
    raise ValueError(f"unknown attack mode {mode!r}")


@dataclass(frozen=True)
class AttackModel:
    """One configuration of the race: quorum size, hacker laws, detection
    law and reset law.

    Hacker laws are restricted to exponential and gamma so the m-fold sum
    stays in the gamma family.  Detection and reset may be any supported law.
    """

    quorum: int
    hackers: tuple[Law, ...]
    detect: Law
    reset: Law
    _totals: tuple[Gamma, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.quorum) < 1:
            raise ValueError(f"quorum must be at least 1, got {self.quorum}")
        object.__setattr__(self, "quorum", int(self.quorum))
        hackers = tuple(self.hackers)
        if not hackers:
            raise ValueError("at least one hacker law is required")
        totals = []
        for law in hackers:
            if isinstance(law, Exponential):
                totals.append(Gamma(shape=float(self.quorum), rate=law.rate))
            elif isinstance(law, Gamma):
                totals.append(Gamma(shape=self.quorum * law.shape, rate=law.rate))
            else:
                raise UnsupportedFamilyError(
                    f"hacker law {law!r} is not closed under m-fold sums; "
                    "use Exponential or Gamma"
                )
        for law in (self.detect, self.reset):
            if not isinstance(law, (Exponential, Gamma, Weibull)):
                raise TypeError(f"unsupported law {law!r}")
        object.__setattr__(self, "hackers", hackers)
        object.__setattr__(self, "_totals", tuple(totals))

    @classmethod
    def from_nodes(
        cls,
        n: int,
        mode: AttackMode,
        hackers: Sequence[Law],
        detect: Law,
        reset: Law,
    ) -> "AttackModel":
        return cls(quorum=quorum_size(n, mode), hackers=tuple(hackers), detect=detect, reset=reset)

    @property
    def k(self) -> int:
        return len(self.hackers)

    def hacker_totals(self) -> tuple[Gamma, ...]:
        """Law of each hacker's m-fold breach-time sum."""
        return self._totals

    def hacker_total_cdf(self, index: int, z):
        """CDF of hacker ``index``'s m-fold breach-time sum."""
        return self._totals[index].cdf(z)

    def min_hack_time_cdf(self, z):
        """CDF of the earliest breach time (minimum over hackers of the sums)."""
        arr, scalar = _as_time(z)
        return _ret(1.0 - self._min_sf(arr), scalar)

    def min_hack_time_sf(self, z):
        """Survival function of the earliest breach time."""
        arr, scalar = _as_time(z)
        return _ret(self._min_sf(arr), scalar)

    def min_hack_time_pdf(self, z):
        """Density of the earliest breach time (product-rule expansion)."""
        arr, scalar = _as_time(z)
        sfs = [total.sf(arr) for total in self._totals]
        acc = 0.0
        for j, total in enumerate(self._totals):
            term = total.pdf(arr)
            for l, sf in enumerate(sfs):
                if l != j:
                    term = term * sf
            acc = acc + term
        return _ret(acc, scalar)

    def _min_sf(self, arr):
        surv = 1.0
        for total in self._totals:
            surv = surv * total.sf(arr)
        return surv


def hack_probability(model: AttackModel, tol: float = 1e-9) -> float:
    """Probability that a cycle ends in a breach rather than a reset.

    Integrates the earliest-breach CDF against the detection measure,
    substituted through the detection quantile so no density appears (laws
    with unbounded density at zero stay well behaved).  The substitution
    interval is capped at ``1 - 1e-12``, leaving at most that much
    detection mass out of the integral.
    """
    detect = model.detect

    def integrand(u: float) -> float:
        return float(model.min_hack_time_cdf(detect.quantile(u)))

    value = adaptive_simpson(integrand, 0.0, 1.0 - _TAIL_EPS, tol)
    return min(max(value, 0.0), 1.0)


def transition_matrix(p: float) -> np.ndarray:
    """Embedded cycle chain over {functional, hacked, resetting}.

    From the functional state a cycle ends hacked with probability ``p``
    (absorbing) and resetting otherwise; a finished reset returns to the
    functional state.
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"cycle hack probability must lie in [0, 1], got {p!r}")
    return np.array(
        [
            [0.0, p, 1.0 - p],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
        ]
    )


def limiting_functional_probability(
    model: Optional[AttackModel] = None, *, cycle_hack_prob: Optional[float] = None
) -> float:
    """Long-run probability of never being hacked.

    Conditioning on the first cycle gives P = (1 - p) * P, so the limit is 0
    whenever the per-cycle hack probability is positive, which holds for
    every supported (full-support) law; it is 1 only in the degenerate
    p = 0 case, reachable here only by passing ``cycle_hack_prob=0``.
    """
    if (model is None) == (cycle_hack_prob is None):
        raise ValueError("pass exactly one of model or cycle_hack_prob")
    if model is not None:
        return 0.0
    p = float(cycle_hack_prob)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"cycle hack probability must lie in [0, 1], got {p!r}")
    return 0.0 if p > 0.0 else 1.0
