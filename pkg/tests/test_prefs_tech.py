import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from collective_ramsey.errors import DomainError
from collective_ramsey.prefs_tech import (
    EXP,
    LOG,
    POWER,
    LtcfParams,
    Technology,
    ltcf_inverse,
    ltcf_marginal,
    ltcf_marginal_inverse,
    ltcf_second,
    ltcf_utility,
    tcf_individual,
    technology_eval,
)

gammas = st.sampled_from([0.3, 0.5, 1.0, 2.0, 5.0])
phis = st.sampled_from([-0.2, 0.0, 0.5, 1.0])


def test_modes():
    assert LtcfParams(2.0).mode == POWER
    assert LtcfParams(1.0).mode == LOG
    assert LtcfParams(math.inf, phi=1.0).mode == EXP


@pytest.mark.parametrize("kwargs", [dict(gamma=0.0), dict(gamma=-1.0), dict(gamma=2.0, eta=0.0),
                                    dict(gamma=math.inf, phi=0.0), dict(gamma=2.0, phi=math.nan)])
def test_invalid_params(kwargs):
    with pytest.raises(DomainError):
        LtcfParams(**kwargs)


def test_utility_examples():
    assert ltcf_utility(1.0, LtcfParams(2.0)) == pytest.approx(-2.0)
    assert ltcf_utility(1.0, LtcfParams(1.0)) == 0.0
    assert ltcf_utility(0.0, LtcfParams(2.0)) == -math.inf
    assert ltcf_utility(0.0, LtcfParams(1.0)) == -math.inf


def test_utility_rejects_points_below_bound():
    p = LtcfParams(2.0, 1.0, -0.5)
    assert p.lower_bound == pytest.approx(1.0)
    with pytest.raises(DomainError):
        ltcf_utility(0.5, p)
    with pytest.raises(DomainError):
        ltcf_utility(-1.0, LtcfParams(2.0))
    # at the bound itself the value is the legitimate -inf
    assert ltcf_utility(1.0, p) == -math.inf


def test_log_mode_matches_log():
    x = np.linspace(0.1, 5.0, 20)
    p = LtcfParams(1.0, 1.5, 0.3)
    np.testing.assert_allclose(ltcf_utility(x, p), np.log(0.3 + 1.5 * x), rtol=0, atol=1e-15)


def test_exp_mode():
    p = LtcfParams(math.inf, 2.0, 1.0)
    assert ltcf_utility(0.0, p) == 0.0
    assert ltcf_utility(1.0, p) == pytest.approx(1 - math.exp(-2.0))
    assert ltcf_marginal(1.0, p) == pytest.approx(2 * math.exp(-2.0))
    assert tcf_individual(3.0, p) == pytest.approx(0.5)


@pytest.mark.parametrize("gamma", [1 - 1e-4, 1 + 1e-4])
def test_log_limit_consistency(gamma):
    x = np.linspace(0.2, 5.0, 50)
    for phi in (0.0, 0.5):
        p = LtcfParams(gamma, 1.0, phi)
        assert np.max(np.abs(ltcf_utility(x, p) - np.log(phi + x))) <= 1e-3


def test_marginal_examples():
    assert ltcf_marginal(2.0, LtcfParams(2.0)) == pytest.approx(1.0)
    assert ltcf_marginal(0.0, LtcfParams(1.0, 1.0, 1.0)) == pytest.approx(1.0)
    assert ltcf_marginal(0.0, LtcfParams(2.0)) == math.inf
    h = 1e-5
    p = LtcfParams(2.0)
    fd = (ltcf_utility(2 + h, p) - ltcf_utility(2 - h, p)) / (2 * h)
    assert abs(fd - ltcf_marginal(2.0, p)) <= 1e-6


def test_tcf_examples():
    assert tcf_individual(4.0, LtcfParams(2.0)) == pytest.approx(2.0)
    assert tcf_individual(0.0, LtcfParams(2.0, 1.0, 1.0)) == pytest.approx(1.0)


@given(gammas, phis, st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_tcf_is_affine(gamma, phi, x1, x2):
    p = LtcfParams(gamma, 1.0, phi)
    assume(min(x1, x2) > p.lower_bound + 1e-3)
    assert tcf_individual(x1, p) + tcf_individual(x2, p) == pytest.approx(2 * tcf_individual((x1 + x2) / 2, p))


@given(gammas, phis, st.floats(0.2, 5.0))
def test_tcf_identity(gamma, phi, x):
    p = LtcfParams(gamma, 1.0, phi)
    assume(x > p.lower_bound + 0.1)
    h = 1e-6 * max(1.0, x)
    second = (ltcf_marginal(x + h, p) - ltcf_marginal(x - h, p)) / (2 * h)
    assert tcf_individual(x, p) * -second == pytest.approx(ltcf_marginal(x, p), rel=1e-7)
    assert second == pytest.approx(ltcf_second(x, p), rel=1e-6)


@given(gammas, phis, st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.floats(0.05, 0.95))
def test_strict_concavity(gamma, phi, x1, x2, lam):
    p = LtcfParams(gamma, 1.0, phi)
    assume(min(x1, x2) > p.lower_bound + 1e-2 and abs(x1 - x2) > 1e-2)
    mid = lam * x1 + (1 - lam) * x2
    assert ltcf_utility(mid, p) > lam * ltcf_utility(x1, p) + (1 - lam) * ltcf_utility(x2, p)


@given(gammas, phis, st.floats(0.05, 5.0))
def test_inverses_round_trip(gamma, phi, x):
    p = LtcfParams(gamma, 1.3, phi)
    assume(x > p.lower_bound + 1e-3)
    assert ltcf_inverse(ltcf_utility(x, p), p) == pytest.approx(x, rel=1e-9)
    assert ltcf_marginal_inverse(ltcf_marginal(x, p), p) == pytest.approx(x, rel=1e-9)


def test_inverse_outside_range_is_nan():
    # power utility with gamma > 1 is bounded above by gamma / (gamma - 1)
    assert math.isnan(ltcf_inverse(5.0, LtcfParams(2.0)))


def test_array_in_array_out():
    p = LtcfParams(2.0)
    out = ltcf_utility(np.array([1.0, 2.0]), p)
    assert isinstance(out, np.ndarray) and out.shape == (2,)
    assert isinstance(ltcf_utility(1.0, p), float)


def test_technology_examples():
    f, fp, kmax = technology_eval(1.0, Technology(1.0, 0.5))
    assert kmax == 1.0 and f == 1.0 and fp == pytest.approx(0.5)
    t2 = Technology(2.0, 0.5)
    assert t2.k_max == pytest.approx(4.0)
    assert technology_eval(4.0, t2)[0] == pytest.approx(4.0)
    assert technology_eval(0.0, t2)[0] == 0.0
    assert technology_eval(0.0, t2)[1] == math.inf
    with pytest.raises(DomainError):
        technology_eval(-1.0, t2)


@given(st.floats(0.2, 5.0), st.floats(0.1, 0.9))
def test_technology_properties(A, a):
    tech = Technology(A, a)
    assert abs(tech.output(tech.k_max) / tech.k_max - 1) <= 1e-10
    k = np.linspace(1e-3, 1.0, 50) * tech.k_max
    f = tech.output(k)
    assert np.all(np.diff(f) > 0)
    assert np.all(np.diff(tech.marginal(k)) < 0)
    # the Inada condition beats any admissible discount factor
    assert tech.marginal(1e-200 * tech.k_max) > 1 / 0.01
