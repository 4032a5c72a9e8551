"""Shared fixtures and closed-form helpers.

The all-exponential unit-rate race (one hacker, quorum 1, detect and reset
all Exp(1)) has exact solutions used as oracles throughout:

* per-cycle hack probability 1/2, mean functional time 2,
* completed-cycle law 1 + e^{-2t} - 2 e^{-t},
* not-hacked-by-t probability  c1 e^{s1 t} + c2 e^{s2 t}
  with s1, s2 the roots of s^2 + 3 s + 1 (from the restart equation's
  Laplace transform (s + 2)/(s^2 + 3 s + 1)),
* completed-cycle renewal function ((e^{s1 t}-1)/s1 - (e^{s2 t}-1)/s2)/sqrt(5).

More generally, with k unit-rate hackers at quorum 1 the transform is
(s + 2)/(s^2 + (k + 2) s + k), giving E[T] = 2/k; and at k = 1 the quorum-m
mean is E[T_m] = 2^{m+1} - 2.
"""

import math

import numpy as np
import pytest

from quorumsim import AttackModel, Exponential


@pytest.fixture
def canonical():
    law = Exponential(1.0)
    return AttackModel(quorum=1, hackers=(law,), detect=law, reset=law)


@pytest.fixture
def canonical_k3():
    law = Exponential(1.0)
    return AttackModel(quorum=1, hackers=(law, law, law), detect=law, reset=law)


def exp_race_survival(t, k: int = 1):
    """Exact not-hacked probability for quorum 1, k unit-rate hackers."""
    t = np.asarray(t, dtype=float)
    b = k + 2.0
    disc = math.sqrt(b * b - 4.0 * k)
    s1 = (-b + disc) / 2.0
    s2 = (-b - disc) / 2.0
    c1 = (s1 + 2.0) / (s1 - s2)
    c2 = (s2 + 2.0) / (s2 - s1)
    return c1 * np.exp(s1 * t) + c2 * np.exp(s2 * t)


def exp_race_renewal(t):
    """Exact completed-cycle renewal function for the canonical race."""
    t = np.asarray(t, dtype=float)
    r5 = math.sqrt(5.0)
    s1 = (-3.0 + r5) / 2.0
    s2 = (-3.0 - r5) / 2.0
    return ((np.exp(s1 * t) - 1.0) / s1 - (np.exp(s2 * t) - 1.0) / s2) / r5
