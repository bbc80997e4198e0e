import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collective_ramsey.axioms import (
    TemporalPayment,
    check_axioms,
    impatience_gap,
    indifference_amounts,
    log_beta_hat,
    marginal_impatience_profile,
    mrs,
    pure_rate,
)
from collective_ramsey.prefs_tech import LtcfParams
from collective_ramsey.weights import DiscountProfile, beta_closed, beta_hat_closed, effective_mu, update_weights

D2 = DiscountProfile([0.9, 0.8])


@st.composite
def heterogeneous(draw):
    n = draw(st.integers(2, 4))
    top = draw(st.floats(0.8, 0.99))
    gaps = draw(st.lists(st.floats(0.02, 0.08), min_size=n - 1, max_size=n - 1))
    delta = top - np.concatenate([[0.0], np.cumsum(gaps)])
    raw = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    gamma = draw(st.sampled_from([0.5, 1.0, 2.0, 5.0]))
    return raw / raw.sum(), DiscountProfile(delta, gamma)


def test_payment_validation():
    assert TemporalPayment(1.0, 3).date == 3
    with pytest.raises(ValueError):
        TemporalPayment(1.0, -1)


def test_log_beta_hat_matches_closed_form():
    d = DiscountProfile([0.95, 0.85, 0.7], 2.0)
    t = np.arange(40)
    np.testing.assert_allclose(np.exp(log_beta_hat([0.2, 0.3, 0.5], d, t)), beta_hat_closed([0.2, 0.3, 0.5], d, t), rtol=1e-13)


def test_gap_examples():
    assert impatience_gap([0.5, 0.5], D2, 1.0, 0, 1, 0, 1) == pytest.approx(1 / 0.85 - 0.85 / 0.725, rel=1e-12)
    assert impatience_gap([0.5, 0.5], D2, 1.0, 0, 1, 0, 1) == pytest.approx(0.004057, abs=1e-6)
    assert impatience_gap([0.5, 0.5], D2, 1.0, 3, 3, 0, 4) == 0.0
    assert impatience_gap([1.0], DiscountProfile([0.9]), 2.0, 0, 5, 1, 4) == 0.0
    with pytest.raises(ValueError):
        impatience_gap([0.5, 0.5], D2, 1.0, 2, 1, 0, 1)


@given(heterogeneous(), st.integers(0, 20), st.integers(1, 8), st.integers(0, 20), st.integers(1, 8))
def test_gap_positive_for_strict_delays(args, t, dt, tau, dtau):
    theta0, d = args
    gap = impatience_gap(theta0, d, None, t, t + dt, tau, tau + dtau)
    assert gap > 0


@given(heterogeneous())
def test_verdict_heterogeneous(args):
    theta0, d = args
    p = LtcfParams(d.gamma)
    for b in indifference_amounts(p, d.n):
        v = check_axioms(b, None, 0, 2, 1, 3, theta0=theta0, d=d, p=p)
        assert v.triple == (False, False, True)
        assert v.feasible and not v.ambiguous


def test_verdict_examples():
    p = LtcfParams(1.0)
    hom = check_axioms(2.0, None, 0, 3, 1, 4, theta0=[1.0], d=DiscountProfile([0.9]), p=p)
    assert hom.triple == (True, True, True)
    same_delay = check_axioms(2.0, None, 0, 3, 2, 2, theta0=[0.5, 0.5], d=D2, p=p)
    assert same_delay.triple == (True, True, True)
    assert same_delay.witness[1] == pytest.approx(2.0)


def test_supplied_amount_is_checked():
    p = LtcfParams(1.0)
    v = check_axioms(2.0, None, 0, 3, 1, 4, theta0=[0.5, 0.5], d=D2, p=p)
    again = check_axioms(2.0, v.witness[1], 0, 3, 1, 4, theta0=[0.5, 0.5], d=D2, p=p)
    assert again.triple == v.triple
    with pytest.raises(ValueError):
        check_axioms(2.0, 5.0, 0, 3, 1, 4, theta0=[0.5, 0.5], d=D2, p=p)


def test_infeasible_indifference():
    # gamma < 1 utility is bounded below; a negative level scaled up can leave its range
    p = LtcfParams(0.5)
    v = check_axioms(0.01, None, 0, 1, 0, 40, theta0=[0.5, 0.5], d=D2, p=p)
    assert not v.feasible and v.triple == (None, None, None)


def test_pure_rate_examples():
    assert pure_rate([1.0, 0.0], D2, 1.0) == pytest.approx(1 / 0.9 - 1)
    assert pure_rate([0.5, 0.5], D2, 2.0) == pytest.approx(0.177490, abs=1e-6)
    assert pure_rate([0.3, 0.7], DiscountProfile([0.9, 0.9]), 2.0) == pytest.approx(1 / 0.9 - 1)


@given(heterogeneous())
def test_pure_rate_bounds(args):
    theta, d = args
    r = pure_rate(theta, d)
    assert 1 / d.delta[0] - 1 - 1e-12 <= r <= 1 / d.delta[-1] - 1 + 1e-12


@given(heterogeneous(), st.floats(0.5, 5.0))
def test_mrs_at_equal_consumption(args, x):
    theta, d = args
    p = LtcfParams(d.gamma)
    nxt = update_weights(theta, d)
    assert mrs(x, x, theta, nxt, p, d) == pytest.approx(1 / effective_mu(theta, d), rel=1e-12)


def test_mrs_log_symmetric():
    assert mrs(2.0, 2.0, [0.5, 0.5], update_weights([0.5, 0.5], D2), LtcfParams(1.0), D2) == pytest.approx(1 / 0.85)


@given(heterogeneous())
def test_impatience_profile(args):
    theta0, d = args
    prof = marginal_impatience_profile(theta0, d, None, 300)
    assert np.all(np.diff(prof.log_excess) < 0)
    assert prof.limit == pytest.approx(1 / d.delta[0] - 1)
    theta = theta0
    for t in range(20):
        assert prof.rates[t] == pytest.approx(pure_rate(theta, d), rel=1e-12)
        theta = update_weights(theta, d)


def test_impatience_profile_homogeneous():
    prof = marginal_impatience_profile([0.5, 0.5], DiscountProfile([0.9, 0.9]), 2.0, 10)
    np.testing.assert_allclose(prof.rates, 1 / 0.9 - 1)
    with pytest.raises(ValueError):
        marginal_impatience_profile([1.0], DiscountProfile([0.9]), 1.0, 1)


def test_beta_orderings_agree():
    d = DiscountProfile([0.95, 0.8, 0.7], 3.0)
    t = np.arange(50)
    b, bh = beta_closed([0.2, 0.3, 0.5], d, t), beta_hat_closed([0.2, 0.3, 0.5], d, t)
    np.testing.assert_array_equal(np.argsort(b), np.argsort(bh))


def test_impatience_gap_sign_is_exact_far_out(rng):
    # far beyond the resolvable range the gap is tiny but never negative
    for _ in range(2000):
        n = int(rng.integers(2, 5))
        d = DiscountProfile(np.sort(rng.uniform(0.3, 0.99, n))[::-1])
        theta0 = rng.dirichlet(np.ones(n))
        t, tau = (int(v) for v in rng.integers(0, 200, 2))
        gap = impatience_gap(theta0, d, float(rng.choice([0.5, 1.0, 3.0])), t, t + int(rng.integers(1, 20)),
                             tau, tau + int(rng.integers(1, 20)))
        assert gap >= 0.0
