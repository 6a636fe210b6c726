"""Tests for the closed-form laws and the statistical checks."""

import numpy as np
import pytest
import scipy.stats

from banach_coupling import (
    EmpiricalSample,
    LawSpec,
    cameron_martin_log_density,
    empirical_sample,
    first_passage_cdf,
    join_mass,
    ks_report,
    ks_statistic,
    max_coupling_prob,
    ruin_check,
    std_normal_tail,
)
from banach_coupling.analysis import (
    KS_COEFF_99,
    LAW_FIRST_PASSAGE,
    fraction_check,
    mean_check,
    median_trajectory_check,
    variance_check,
)


def test_std_normal_tail_values():
    assert std_normal_tail(0.0) == 0.5
    assert std_normal_tail(1.0) == pytest.approx(0.15865525393145707, abs=1e-16)
    assert std_normal_tail(-1.0) == pytest.approx(1.0 - 0.15865525393145707, abs=1e-15)
    np.testing.assert_allclose(
        std_normal_tail(np.array([0.5, 2.0])),
        1.0 - scipy.stats.norm.cdf([0.5, 2.0]),
        rtol=1e-14,
    )


def test_join_mass_values():
    assert join_mass(0.0) == 1.0
    assert join_mass(2.0) == pytest.approx(0.3173105078629141, abs=1e-15)
    assert join_mass(1.0) == pytest.approx(0.6170750774519738, abs=1e-15)
    h = np.linspace(0.0, 6.0, 25)
    jm = join_mass(h)
    assert np.all(np.diff(jm) < 0.0)
    assert np.all((jm > 0.0) & (jm <= 1.0))


def test_max_coupling_prob_values():
    assert max_coupling_prob(1.0, 1.0) == pytest.approx(0.6170750774519738, abs=1e-15)
    assert max_coupling_prob(2.0, 1.0) == pytest.approx(0.3173105078629141, abs=1e-15)
    t = np.logspace(-2, 4, 30)
    p = max_coupling_prob(1.5, t)
    assert np.all(np.diff(p) > 0.0)
    assert p[-1] > 0.98
    with pytest.raises(ValueError):
        max_coupling_prob(1.0, 0.0)


def test_max_coupling_prob_equals_first_passage_cdf():
    # Coupling by time t happens with the first-passage probability of a
    # standard Brownian motion from level hnorm / 2.
    rng = np.random.default_rng(44)
    for _ in range(50):
        h = float(rng.uniform(0.05, 8.0))
        t = float(rng.uniform(0.01, 50.0))
        assert max_coupling_prob(h, t) == pytest.approx(
            first_passage_cdf(h / 2.0, t), rel=1e-12
        )


def test_first_passage_cdf_properties():
    assert first_passage_cdf(1.0, 0.0) == 0.0
    assert first_passage_cdf(1.0, 1.0) == pytest.approx(0.3173105078629141, abs=1e-15)
    t = np.linspace(0.0, 100.0, 200)
    f = first_passage_cdf(0.5, t)
    assert np.all(np.diff(f) > 0.0)
    assert f[-1] > 0.9
    with pytest.raises(ValueError):
        first_passage_cdf(0.0, 1.0)
    with pytest.raises(ValueError):
        first_passage_cdf(1.0, -1.0)


def test_first_passage_cdf_scaling():
    # F_a(t) = F_1(t / a^2): diffusive scaling.
    for a in (0.5, 1.0, 2.0, 3.0):
        for t in (0.1, 1.0, 7.0):
            assert first_passage_cdf(a, t) == pytest.approx(
                first_passage_cdf(1.0, t / a**2), rel=1e-12
            )


def test_cameron_martin_log_density():
    x = np.array([1.0, -2.0, 0.5])
    assert cameron_martin_log_density(x, np.zeros(3)) == pytest.approx(
        -0.5 * np.dot(x, x), rel=1e-15
    )
    theta = np.array([0.5, 0.25, -1.0])
    expect = float(theta @ x - 0.5 * x @ x)
    assert cameron_martin_log_density(x, theta) == pytest.approx(expect, rel=1e-15)
    # Batched form evaluates one log weight per row.
    thetas = np.vstack([np.zeros(3), theta])
    out = cameron_martin_log_density(x, thetas)
    np.testing.assert_allclose(out, [-0.5 * x @ x, expect], rtol=1e-15)


def test_cameron_martin_density_additivity():
    # Orthogonal displacements multiply densities, i.e. log weights add.
    rng = np.random.default_rng(10)
    theta = rng.standard_normal(6)
    x = np.zeros(6)
    y = np.zeros(6)
    x[:3] = rng.standard_normal(3)
    y[3:] = rng.standard_normal(3)
    lhs = cameron_martin_log_density(x + y, theta)
    rhs = cameron_martin_log_density(x, theta) + cameron_martin_log_density(y, theta)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_cameron_martin_mean_weight_is_one():
    rng = np.random.default_rng(606)
    x = np.array([0.3, -0.4])
    thetas = rng.standard_normal((200_000, 2))
    w = np.exp(cameron_martin_log_density(x, thetas))
    se = w.std(ddof=1) / np.sqrt(len(w))
    assert abs(w.mean() - 1.0) < 3.0 * se


def test_law_spec_validation_and_labels():
    law = LawSpec(kind=LAW_FIRST_PASSAGE, a=1.0)
    assert law.label() == "first-passage(a=1)"
    assert law.cdf(1.0) == pytest.approx(0.3173105078629141, abs=1e-15)
    jm = LawSpec(kind="join-mass", hnorm=2.0)
    assert jm.value() == pytest.approx(0.3173105078629141, abs=1e-15)
    # Total variation remaining at time t is 1 - max_coupling_prob.
    tv = LawSpec(kind="tv-at-time", hnorm=1.0, t=1.0)
    assert tv.value() == pytest.approx(1.0 - 0.6170750774519738, abs=1e-15)
    with pytest.raises(ValueError):
        LawSpec(kind="first-passage")  # missing level
    with pytest.raises(ValueError):
        LawSpec(kind="no-such-law", a=1.0)


def test_empirical_sample_sorting_and_censoring():
    s = empirical_sample([3.0, None, 1.0, 2.0], horizon=5.0)
    np.testing.assert_array_equal(s.draws, [1.0, 2.0, 3.0, 5.0])
    np.testing.assert_array_equal(s.censored, [False, False, False, True])
    assert s.n_censored == 1
    with pytest.raises(ValueError):
        empirical_sample([1.0, None])  # censored draw needs a horizon


def test_ks_statistic_exact_quantile_construction():
    # Draws placed at the law's own quantiles i/(n+1)... use exact midpoint
    # construction: with draws at quantiles (i - 0.5) / n the distance is
    # exactly 1 / (2n).
    law = LawSpec(kind=LAW_FIRST_PASSAGE, a=1.0)
    n = 64
    # invert the cdf by bisection
    probs = (np.arange(1, n + 1) - 0.5) / n
    lo = np.full(n, 1e-12)
    hi = np.full(n, 1e12)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        too_low = law.cdf(mid) < probs
        lo[too_low] = mid[too_low]
        hi[~too_low] = mid[~too_low]
    sample = empirical_sample(0.5 * (lo + hi))
    assert ks_statistic(sample, law) == pytest.approx(1.0 / (2 * n), abs=1e-9)


def test_ks_statistic_against_scipy():
    rng = np.random.default_rng(2021)
    z = rng.standard_normal(500)
    draws = 1.0 / z[z != 0.0] ** 2  # first-passage law for a = 1
    law = LawSpec(kind=LAW_FIRST_PASSAGE, a=1.0)
    ours = ks_statistic(empirical_sample(draws), law)
    ref = scipy.stats.kstest(draws, lambda t: first_passage_cdf(1.0, t)).statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_ks_self_law_passes():
    rng = np.random.default_rng(7)
    n = 20_000
    z = rng.standard_normal(n)
    z = z[z != 0.0]
    draws = 4.0 / z**2  # level a = 2
    law = LawSpec(kind=LAW_FIRST_PASSAGE, a=2.0)
    rep = ks_report(empirical_sample(draws), law)
    assert rep["pass"]
    assert rep["critical_value"] == pytest.approx(KS_COEFF_99 / np.sqrt(len(draws)))
    assert rep["statistic"] < rep["critical_value"]


def test_ks_detects_wrong_law():
    rng = np.random.default_rng(8)
    z = rng.standard_normal(5000)
    z = z[z != 0.0]
    draws = 1.0 / z**2
    wrong = LawSpec(kind=LAW_FIRST_PASSAGE, a=2.0)
    rep = ks_report(empirical_sample(draws), wrong)
    assert not rep["pass"]


def test_ks_with_censoring():
    rng = np.random.default_rng(9)
    z = rng.standard_normal(5000)
    z = z[z != 0.0]
    t = 1.0 / z**2
    horizon = 50.0
    draws = [float(v) if v <= horizon else None for v in t]
    sample = empirical_sample(draws, horizon=horizon)
    assert sample.n_censored == (t > horizon).sum()
    law = LawSpec(kind=LAW_FIRST_PASSAGE, a=1.0)
    stat = ks_statistic(sample, law)
    # The censored tail inflates the distance by at most the censored mass.
    tail = 1.0 - first_passage_cdf(1.0, horizon)
    assert stat < KS_COEFF_99 / np.sqrt(5000) + 2 * tail
    with pytest.raises(ValueError):
        ks_statistic(empirical_sample([None, None], horizon=1.0), law)


def test_ruin_check_target():
    rng = np.random.default_rng(10)
    u = rng.uniform(size=40_000)
    sups = 1.0 / (1.0 - u)  # exact Pareto(1): P[sup >= lam] = 1/lam
    rep = ruin_check(5.0, sups)
    assert rep["target"] == pytest.approx(0.2)
    assert rep["pass"]
    assert rep["law"] == "ruin(lambda=5)"
    with pytest.raises(ValueError):
        ruin_check(1.0, sups)


def test_fraction_check_behaviour():
    rep = fraction_check("demo", successes=320, n=1000, target=0.3)
    assert rep["pass"]
    rep = fraction_check("demo", successes=500, n=1000, target=0.3)
    assert not rep["pass"]
    assert rep["empirical"] == pytest.approx(0.5)
    assert rep["statistic"] == pytest.approx(0.2)  # distance from the target


def test_mean_and_variance_checks():
    rng = np.random.default_rng(11)
    draws = rng.standard_normal(50_000) * 2.0 + 3.0
    m = mean_check("m", draws, 3.0)
    assert m["pass"]
    v = variance_check("v", draws, 4.0)
    assert v["pass"]
    v_bad = variance_check("v", draws, 5.0)
    assert not v_bad["pass"]


def test_median_trajectory_check():
    rep = median_trajectory_check("decay", [1, 4, 16], [0.4, 0.2, 0.01], d0=0.577, final_ratio=0.1)
    assert rep["pass"] and rep["strictly_decreasing"]
    rep = median_trajectory_check("decay", [1, 4, 16], [0.4, 0.45, 0.01], d0=0.577, final_ratio=0.1)
    assert not rep["pass"]
    rep = median_trajectory_check("decay", [1, 4, 16], [0.4, 0.2, 0.1], d0=0.577, final_ratio=0.1)
    assert not rep["pass"]  # final median above 10 percent of the start
