"""Semi-analytic engine checks against closed forms and the MC engine."""

import math

import numpy as np
import pytest

from conftest import exp_race_renewal, exp_race_survival
from quorumsim import (
    AttackModel,
    ConditioningError,
    Exponential,
    Gamma,
    GammaSumSeriesParams,
    InfiniteMeanError,
    ResolutionError,
    Weibull,
    conditional_detect_mean,
    conditional_hack_mean,
    cycle_length_cdf,
    estimate_mean_functional_time,
    functional_term,
    gamma_sum_cdf,
    instantaneous_prob,
    mean_functional_time,
    renewal_function,
    renewal_residual,
    resetting_term,
    simulate_replications,
)

EXP1 = Exponential(1.0)


def test_conditional_means_closed_forms(canonical, canonical_k3):
    # symmetric unit race: both conditional winners are Exp(2) minima
    assert conditional_detect_mean(canonical) == pytest.approx(0.5, abs=1e-9)
    assert conditional_hack_mean(canonical) == pytest.approx(0.5, abs=1e-9)
    # minimum of four unit exponentials
    assert conditional_hack_mean(canonical_k3) == pytest.approx(0.25, abs=1e-6)


def test_conditional_detect_mean_vacuous_conditioning():
    # detection mass far below the hacking mass: conditioning is vacuous
    model = AttackModel(
        quorum=1, hackers=(Gamma(50.0, 1.0),), detect=Exponential(100.0), reset=EXP1
    )
    assert conditional_detect_mean(model) == pytest.approx(0.01, abs=1e-4)


def test_conditional_means_match_direct_sampler():
    model = AttackModel(
        quorum=2, hackers=(Gamma(1.5, 1.0), EXP1), detect=Gamma(2.0, 1.5), reset=EXP1
    )
    rng = np.random.default_rng(17)
    n = 1_000_000
    z = np.minimum(rng.gamma(3.0, 1.0, size=n), rng.gamma(2.0, 1.0, size=n))
    y = rng.gamma(2.0, 1.0 / 1.5, size=n)
    detect_wins = y < z
    for estimate, sample in (
        (conditional_detect_mean(model), y[detect_wins]),
        (conditional_hack_mean(model), z[~detect_wins]),
    ):
        se = sample.std(ddof=1) / math.sqrt(sample.size)
        assert abs(estimate - sample.mean()) < 3.0 * se


def test_conditioning_errors(canonical):
    with pytest.raises(ConditioningError):
        conditional_detect_mean(canonical, cycle_hack_prob=1.0)
    with pytest.raises(ConditioningError):
        conditional_hack_mean(canonical, cycle_hack_prob=0.0)
    with pytest.raises(InfiniteMeanError):
        mean_functional_time(canonical, cycle_hack_prob=0.0)


def test_mean_functional_time_canonical(canonical):
    assert mean_functional_time(canonical) == pytest.approx(2.0, abs=1e-6)


def test_mean_functional_time_quorum_closed_form():
    # unit-rate race, k = 1: E[T_m] = 2^{m+1} - 2
    for m in range(1, 9):
        model = AttackModel(quorum=m, hackers=(EXP1,), detect=EXP1, reset=EXP1)
        assert mean_functional_time(model) == pytest.approx(2.0 ** (m + 1) - 2.0, rel=1e-8)


def test_mean_functional_time_hacker_closed_form():
    # unit-rate race, m = 1: E[T] = 2 / k
    for k in range(1, 7):
        model = AttackModel(quorum=1, hackers=(EXP1,) * k, detect=EXP1, reset=EXP1)
        assert mean_functional_time(model) == pytest.approx(2.0 / k, rel=1e-8)


def test_mean_functional_time_vanishing_reset(canonical):
    fast_reset = AttackModel(
        quorum=1, hackers=(EXP1,), detect=EXP1, reset=Exponential(1e6)
    )
    expected = conditional_detect_mean(canonical) + conditional_hack_mean(canonical)
    assert mean_functional_time(fast_reset) == pytest.approx(expected, abs=1e-5)


@pytest.mark.parametrize(
    "model",
    [
        AttackModel(quorum=1, hackers=(EXP1,), detect=EXP1, reset=EXP1),
        AttackModel(quorum=2, hackers=(Gamma(1.5, 1.0),) * 2, detect=Gamma(2.0, 1.5), reset=Gamma(1.5, 2.0)),
        AttackModel(quorum=2, hackers=(Gamma(2.0, 2.0),) * 3, detect=Weibull(1.5, 1.3), reset=Gamma(2.0, 2.0)),
        AttackModel(quorum=3, hackers=(EXP1, Gamma(0.9, 1.1)), detect=Exponential(0.8), reset=Weibull(1.0, 1.5)),
        AttackModel(quorum=2, hackers=(Gamma(1.2, 0.8),), detect=Weibull(2.0, 2.0), reset=EXP1),
    ],
    ids=["exp", "gamma", "gamma+weibull", "mixed", "weibull-detect"],
)
def test_mean_functional_time_matches_mc(model):
    est = estimate_mean_functional_time(model, 30_000, seed=0)
    assert abs(mean_functional_time(model) - est.mean) < 3.0 * est.stderr


def test_functional_term(canonical):
    assert functional_term(canonical, 0.0) == 1.0
    assert functional_term(canonical, 0.5) == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert functional_term(canonical, 50.0) < 1e-9


def test_resetting_term_closed_form(canonical):
    # canonical race: B(t) = e^{-t} (1 - e^{-t})
    assert resetting_term(canonical, 0.0) == 0.0
    for t in (0.3, 1.0, 2.5):
        expected = math.exp(-t) * (1.0 - math.exp(-t))
        assert resetting_term(canonical, t) == pytest.approx(expected, abs=1e-9)


def test_resetting_term_instant_reset():
    model = AttackModel(quorum=1, hackers=(EXP1,), detect=EXP1, reset=Exponential(1e6))
    assert resetting_term(model, 30.0) < 1e-6


def test_resetting_term_matches_mc_state_frequency(canonical):
    # frequency of being inside the first reset at t, from raw cycle draws
    rng = np.random.default_rng(23)
    n = 100_000
    z = rng.exponential(size=n)
    y = rng.exponential(size=n)
    w = rng.exponential(size=n)
    t = 1.0
    inside = (y <= z) & (y <= t) & (t < y + w)
    phat = inside.mean()
    se = math.sqrt(phat * (1 - phat) / n)
    assert abs(resetting_term(canonical, t) - phat) < 3.0 * se


def test_cycle_length_cdf_closed_form(canonical):
    times = np.linspace(0.0, 40.0, 4097)
    cdf = cycle_length_cdf(canonical, times)
    assert cdf[0] == 0.0
    assert cdf[-1] == pytest.approx(1.0, abs=1e-6)
    # conditional detect is Exp(2); plus Exp(1) reset
    exact = 1.0 + np.exp(-2.0 * times) - 2.0 * np.exp(-times)
    assert np.abs(cdf - exact).max() < 1e-4


def test_cycle_length_cdf_vacuous_conditioning_closed_form():
    # detection far below hacking mass: increment law is just Y + W with
    # distinct-rate exponentials, CDF 1 - eta/(eta-delta) e^{-delta t}
    #                                  + delta/(eta-delta) e^{-eta t}
    delta, eta = 1.0, 3.0
    model = AttackModel(
        quorum=1,
        hackers=(Gamma(50.0, 1.0),),
        detect=Exponential(delta),
        reset=Exponential(eta),
    )
    times = np.linspace(0.0, 30.0, 4097)
    cdf = cycle_length_cdf(model, times)
    exact = 1.0 - eta / (eta - delta) * np.exp(-delta * times) + delta / (eta - delta) * np.exp(
        -eta * times
    )
    assert np.abs(cdf - exact).max() < 1e-3


def test_cycle_length_cdf_cross_checks_gamma_sum_series():
    # pure-gamma vacuous-conditioning configuration: the increment law is
    # the two-gamma sum, independently computable by the series expansion
    model = AttackModel(
        quorum=1,
        hackers=(Gamma(60.0, 1.0),),
        detect=Gamma(2.0, 1.5),
        reset=Gamma(1.5, 2.0),
    )
    times = np.linspace(0.0, 25.0, 2049)
    cdf = cycle_length_cdf(model, times)
    params = GammaSumSeriesParams(2.0, 1.5, 1.5, 2.0)
    series = gamma_sum_cdf(params, times)
    assert np.abs(cdf - series).max() < 1e-3


def test_renewal_function_closed_form(canonical):
    grid = renewal_function(canonical, horizon=30.0)
    assert grid.g[0] == 0.0
    assert np.all(np.diff(grid.g) >= 0.0)
    exact = exp_race_renewal(grid.times)
    assert np.abs(grid.g - exact).max() < 1e-4
    assert renewal_residual(grid) <= 10.0 * grid.step


def test_renewal_function_poisson_limit():
    # near-instant resets and vacuous conditioning: increments are nearly
    # Exp(rate), whose renewal function is rate * t
    rate = 2.0
    model = AttackModel(
        quorum=1,
        hackers=(Gamma(50.0, 1.0),),
        detect=Exponential(rate),
        reset=Exponential(1e6),
    )
    grid = renewal_function(model, horizon=5.0)
    sel = grid.times >= 1.0
    rel = np.abs(grid.g[sel] / (rate * grid.times[sel]) - 1.0).max()
    assert rel < 1e-2


def test_renewal_resolution_guard():
    # detection mass concentrated inside one interior cell of a unit step
    model = AttackModel(
        quorum=1,
        hackers=(Gamma(50.0, 1.0),),
        detect=Gamma(22_500.0, 10_000.0),
        reset=Exponential(1e6),
    )
    with pytest.raises(ResolutionError):
        renewal_function(model, step=1.0, horizon=10.0)
    # the same model resolves fine on a step matched to its spread
    grid = renewal_function(model, step=0.002, horizon=10.0)
    assert grid.g[-1] > 0.0


def test_instantaneous_prob_canonical_closed_form(canonical):
    t_grid = np.linspace(0.0, 30.0, 64)
    curve = instantaneous_prob(canonical, t_grid)
    assert curve[0] == 1.0
    assert np.abs(curve - exp_race_survival(t_grid)).max() < 1e-4


def test_instantaneous_prob_k3_closed_form(canonical_k3):
    t_grid = np.linspace(0.0, 12.0, 64)
    curve = instantaneous_prob(canonical_k3, t_grid)
    assert np.abs(curve - exp_race_survival(t_grid, k=3)).max() < 1e-4


def test_instantaneous_prob_tail_and_shape(canonical):
    t_grid = np.linspace(0.0, 40.0, 257)
    curve = instantaneous_prob(canonical, t_grid)
    assert curve[-1] < 0.01
    assert np.all(np.diff(curve) <= 1e-9)
    assert np.all((curve >= 0.0) & (curve <= 1.0))


def test_functional_plus_resetting_bounded(canonical):
    grid = renewal_function(canonical, horizon=20.0)
    a = np.asarray(functional_term(canonical, grid.times))
    b_vals = np.array([resetting_term(canonical, float(t)) for t in grid.times[::256]])
    assert np.all((a >= 0.0) & (a <= 1.0))
    assert np.all((b_vals >= 0.0) & (b_vals <= 1.0))
    assert np.all(a[::256] + b_vals <= 1.0 + 1e-12)


def test_instantaneous_prob_monotone_in_m_and_k():
    t_grid = np.array([1.0, 3.0])
    by_m = np.array(
        [
            instantaneous_prob(
                AttackModel(quorum=m, hackers=(EXP1,) * 2, detect=EXP1, reset=EXP1),
                t_grid,
                horizon=3.0,
            )
            for m in range(1, 7)
        ]
    )
    assert np.all(np.diff(by_m, axis=0) >= -1e-12)
    by_k = np.array(
        [
            instantaneous_prob(
                AttackModel(quorum=2, hackers=(EXP1,) * k, detect=EXP1, reset=EXP1),
                t_grid,
                horizon=3.0,
            )
            for k in range(1, 5)
        ]
    )
    assert np.all(np.diff(by_k, axis=0) <= 1e-12)


def test_mean_functional_time_monotone():
    by_m = [
        mean_functional_time(AttackModel(quorum=m, hackers=(EXP1,), detect=EXP1, reset=EXP1))
        for m in range(1, 11)
    ]
    assert all(b > a for a, b in zip(by_m, by_m[1:]))
    by_k = [
        mean_functional_time(AttackModel(quorum=1, hackers=(EXP1,) * k, detect=EXP1, reset=EXP1))
        for k in range(1, 6)
    ]
    assert all(b < a for a, b in zip(by_k, by_k[1:]))


def test_instantaneous_prob_step_halving(canonical):
    # discretization error is O(step^2); claimed tolerance 10 * step^2
    t_grid = np.linspace(0.0, 10.0, 33)
    coarse_step = 10.0 / 1024
    coarse = instantaneous_prob(canonical, t_grid, step=coarse_step, horizon=10.0)
    fine = instantaneous_prob(canonical, t_grid, step=coarse_step / 2, horizon=10.0)
    assert np.abs(coarse - fine).max() <= 2.0 * 10.0 * coarse_step**2


def test_instantaneous_prob_accepts_prebuilt_grid(canonical):
    grid = renewal_function(canonical, horizon=12.0)
    t_grid = np.linspace(0.0, 10.0, 21)
    via_grid = instantaneous_prob(canonical, t_grid, grid=grid)
    assert np.abs(via_grid - exp_race_survival(t_grid)).max() < 1e-3
    with pytest.raises(ValueError):
        instantaneous_prob(canonical, [15.0], grid=grid)
    with pytest.raises(ValueError):
        instantaneous_prob(canonical, [5.0], horizon=1.0)


def test_survival_integral_recovers_mean_time(canonical):
    # integral of the not-hacked probability equals the mean functional time
    grid = renewal_function(canonical, horizon=80.0)
    curve = instantaneous_prob(canonical, grid.times, grid=grid)
    integral = np.trapezoid(curve, grid.times)
    assert integral == pytest.approx(mean_functional_time(canonical), rel=1e-3)


def test_consistency_with_mc_survival_curve():
    model = AttackModel(
        quorum=2, hackers=(Gamma(1.5, 1.0),) * 2, detect=Gamma(2.0, 1.5), reset=Gamma(1.5, 2.0)
    )
    t_grid = np.linspace(0.0, 40.0, 41)
    outcomes = simulate_replications(model, 20_000, seed=4)
    totals = np.array([o.functional_time for o in outcomes])
    curve = instantaneous_prob(model, t_grid)
    for t, value in zip(t_grid, curve):
        phat = (totals > t).mean()
        se = math.sqrt(max(phat * (1 - phat), 1e-12) / totals.size)
        assert abs(value - phat) <= max(0.02, 3.0 * se)
