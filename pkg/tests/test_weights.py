import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collective_ramsey.weights import (
    DiscountProfile,
    as_weights,
    beta_closed,
    beta_hat_closed,
    discount_sequences,
    effective_mu,
    effective_weights,
    mu,
    update_weights,
    weights_at,
    weights_path,
)

D2 = DiscountProfile([0.9, 0.8])


@st.composite
def profiles(draw, n_min=2, n_max=5, gamma=None):
    n = draw(st.integers(n_min, n_max))
    delta = sorted(draw(st.lists(st.floats(0.3, 0.99), min_size=n, max_size=n, unique=True)), reverse=True)
    g = draw(st.sampled_from([0.5, 1.0, 2.0, 5.0])) if gamma is None else gamma
    raw = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)))
    return DiscountProfile(delta, g), raw / raw.sum()


def test_profile_validation():
    with pytest.raises(ValueError):
        DiscountProfile([0.8, 0.9])
    with pytest.raises(ValueError):
        DiscountProfile([1.0, 0.9])
    with pytest.raises(ValueError):
        DiscountProfile([0.9, 0.0])
    assert not DiscountProfile([0.9, 0.9]).heterogeneous
    np.testing.assert_allclose(DiscountProfile([0.81, 0.64], 2.0).delta_hat, [0.9, 0.8])


def test_as_weights():
    with pytest.raises(ValueError):
        as_weights([0.5, 0.6])
    with pytest.raises(ValueError):
        as_weights([0.0, 0.0])
    with pytest.raises(ValueError):
        as_weights([-0.1, 1.1])
    np.testing.assert_allclose(as_weights([1.0, 3.0], normalize=True), [0.25, 0.75])


def test_update_examples():
    np.testing.assert_allclose(update_weights([0.5, 0.5], D2), [9 / 17, 8 / 17], rtol=1e-15)
    np.testing.assert_array_equal(update_weights([1.0, 0.0], D2), [1.0, 0.0])
    np.testing.assert_allclose(update_weights([0.3, 0.7], DiscountProfile([0.9, 0.9])), [0.3, 0.7])
    with pytest.raises(ValueError):
        update_weights([0.0, 0.0], D2)


def test_weights_at_examples():
    np.testing.assert_array_equal(weights_at([0.5, 0.5], D2, 0), [0.5, 0.5])
    np.testing.assert_allclose(weights_at([0.5, 0.5], D2, 1), update_weights([0.5, 0.5], D2), rtol=1e-15)
    assert weights_at([0.5, 0.5], D2, 500)[0] >= 1 - 1e-10
    with pytest.raises(ValueError):
        weights_at([0.5, 0.5], D2, -1)


def test_weights_at_survives_long_horizons():
    theta, clamped = weights_at([0.5, 0.5], D2, 10_000, full=True)
    np.testing.assert_array_equal(theta, [1.0, 0.0])
    assert clamped.tolist() == [False, True]
    path = weights_path([0.5, 0.5], D2, 800)
    assert path.shape == (801, 2) and np.all(np.isfinite(path))


def test_mu_examples():
    assert mu([0.5, 0.5], D2) == pytest.approx(0.85)
    assert mu([1.0, 0.0], D2) == pytest.approx(0.9)
    assert mu([0.0, 1.0], D2) == pytest.approx(0.8)
    # homogeneous of degree one before normalisation
    assert mu([1.0, 1.0], D2) == pytest.approx(2 * 0.85)


def test_effective_weights_examples():
    np.testing.assert_allclose(effective_weights([0.8, 0.2], 2.0), [2 / 3, 1 / 3])
    np.testing.assert_array_equal(effective_weights([0.3, 0.7], 1.0), [0.3, 0.7])
    np.testing.assert_allclose(effective_weights([0.5, 0.5], 3.0), [0.5, 0.5])
    np.testing.assert_array_equal(effective_weights([1.0, 0.0], 2.0), [1.0, 0.0])


def test_effective_mu_examples():
    d = D2.with_gamma(2.0)
    assert effective_mu([0.5, 0.5], d) == pytest.approx((0.5 * 0.9**0.5 + 0.5 * 0.8**0.5) ** 2)
    assert effective_mu([0.5, 0.5], d) == pytest.approx(0.849264, abs=1e-6)
    assert effective_mu([0.3, 0.7], D2) == mu([0.3, 0.7], D2)
    assert effective_mu([1.0, 0.0], d) == pytest.approx(0.9)


def test_discount_sequence_examples():
    seq = discount_sequences([0.5, 0.5], D2, T=5)
    assert seq.beta[0] == 1.0 and seq.beta_hat[0] == 1.0
    assert seq.beta[1] == pytest.approx(0.85) and seq.beta[2] == pytest.approx(0.725)
    np.testing.assert_allclose(seq.beta_hat, seq.beta, rtol=1e-15)
    with pytest.raises(ValueError):
        discount_sequences([0.5, 0.5], D2, T=0)


@given(profiles())
def test_sequence_recursions(args):
    d, theta0 = args
    seq = discount_sequences(theta0, d, T=50)
    np.testing.assert_allclose(seq.beta[1:], seq.mu[:-1] * seq.beta[:-1], rtol=1e-12)
    np.testing.assert_allclose(seq.beta_hat[1:], seq.mu_hat[:-1] * seq.beta_hat[:-1], rtol=1e-12)
    np.testing.assert_allclose(np.cumprod(np.r_[1.0, seq.mu[:-1]]), seq.beta, rtol=1e-12)
    assert np.all(np.diff(seq.beta) < 0)
    assert np.all((seq.mu >= d.delta[-1] - 1e-15) & (seq.mu <= d.delta[0] + 1e-15))


@given(profiles())
def test_simplex_closure(args):
    d, theta0 = args
    for theta in (update_weights(theta0, d), effective_weights(theta0, d.gamma), weights_at(theta0, d, 37)):
        assert abs(theta.sum() - 1) <= 1e-12 and np.all(theta >= 0)


@given(profiles(), st.integers(0, 300), st.integers(0, 300))
def test_semigroup(args, s, t):
    d, theta0 = args
    direct = weights_at(theta0, d, s + t)
    composed = weights_at(weights_at(theta0, d, s), d, t)
    np.testing.assert_allclose(composed, direct, rtol=1e-10, atol=1e-12)


@given(profiles())
def test_power_mean_bounds(args):
    d, theta = args
    m = effective_mu(theta, d)
    assert d.delta[-1] - 1e-15 <= m <= d.delta[0] + 1e-15


@given(profiles(gamma=2.0))
def test_power_mean_below_arithmetic_for_symmetric_weights(args):
    d, _ = args
    theta = np.full(d.n, 1 / d.n)
    assert effective_mu(theta, d) <= mu(theta, d) + 1e-15


@given(profiles())
def test_relative_weights_shrink(args):
    d, theta0 = args
    path = weights_path(theta0, d, 100)
    rel = path[:, 1:] / path[:, :1]
    assert np.all(np.diff(rel, axis=0) <= 1e-15)


@given(profiles())
def test_closed_forms_match_products(args):
    d, theta0 = args
    t = np.arange(60)
    theta = theta0.copy()
    beta = [1.0]
    for _ in t[1:]:
        beta.append(beta[-1] * mu(theta, d))
        theta = update_weights(theta, d)
    np.testing.assert_allclose(beta_closed(theta0, d, t), beta, rtol=1e-12)
    assert beta_hat_closed(theta0, d, 0) == 1.0
