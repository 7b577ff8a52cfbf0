import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rbe_slab import relkin
from rbe_slab.errors import ConfigError, DegeneratePairError

momenta = arrays(np.float64, 3, elements=st.floats(-20, 20, allow_nan=False))


def unit(v):
    return v / np.linalg.norm(v)


def test_energy_examples():
    assert relkin.energy([0.0, 0.0, 0.0]) == 1.0
    assert relkin.energy([0.0, 3.0, 4.0]) == pytest.approx(np.sqrt(26.0), abs=1e-15)
    assert relkin.energy([1.0, 0.0, 0.0]) == pytest.approx(np.sqrt(2.0), abs=1e-15)


def test_hat_examples():
    np.testing.assert_array_equal(relkin.hat([0.0, 0.0, 0.0]), 0.0)
    np.testing.assert_allclose(relkin.hat([1.0, 0, 0]), [1 / np.sqrt(2), 0, 0], atol=1e-15)
    np.testing.assert_allclose(relkin.hat([0, 3.0, 4.0]), np.array([0, 3, 4]) / np.sqrt(26), atol=1e-15)


@given(momenta)
def test_hat_is_subluminal(p):
    assert np.linalg.norm(relkin.hat(p)) < 1.0


def test_invariants_examples():
    p = np.array([0.3, -1.2, 2.0])
    s, g = relkin.invariants(p, p)
    assert (s, g) == (4.0, 0.0)
    s, g = relkin.invariants([1.0, 0, 0], [-1.0, 0, 0])
    assert s == pytest.approx(8.0, abs=1e-12)
    assert g == pytest.approx(2.0, abs=1e-12)


def test_moller_examples():
    p = np.array([0.7, 0.1, -2.0])
    assert relkin.moller_velocity(p, p) == 0.0
    # |p_hat - q_hat| = 2/sqrt2, no cross term
    assert relkin.moller_velocity([1.0, 0, 0], [-1.0, 0, 0]) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_moller_matches_product_form():
    rng = np.random.default_rng(11)
    p = rng.normal(scale=3.0, size=(10**5, 3))
    q = rng.normal(scale=3.0, size=(10**5, 3))
    vm = relkin.moller_velocity(p, q)
    assert np.max(np.abs(vm - relkin.moller_velocity_product(p, q))) <= 1e-10
    assert np.all((vm >= 0) & (vm < 2))
    np.testing.assert_array_equal(vm, relkin.moller_velocity(q, p))


@given(momenta, momenta)
def test_moller_symmetric(p, q):
    assert relkin.moller_velocity(p, q) == pytest.approx(relkin.moller_velocity(q, p), abs=1e-14)


def test_post_collision_examples():
    p = np.array([0.4, -0.2, 1.0])
    pp, qq = relkin.post_collision(p, p, unit(np.array([1.0, 2.0, 3.0])))
    np.testing.assert_allclose(pp, p, atol=1e-15)
    np.testing.assert_allclose(qq, p, atol=1e-15)
    pp, qq = relkin.post_collision([1.0, 0, 0], [-1.0, 0, 0], [0, 0, 1.0])
    np.testing.assert_allclose(pp, [0, 0, 1.0], atol=1e-12)
    np.testing.assert_allclose(qq, [0, 0, -1.0], atol=1e-12)


def test_post_collision_is_smooth_near_zero_total_momentum():
    om = unit(np.array([0.2, -0.5, 0.8]))
    p = np.array([1.3, 0.4, -0.7])
    a, _ = relkin.post_collision(p, -p, om)
    b, _ = relkin.post_collision(p, -p + 1e-11, om)
    assert np.max(np.abs(a - b)) < 1e-9


def test_scattering_cos_examples():
    assert relkin.scattering_cos([1.0, 0, 0], [-1.0, 0, 0], [0, 0, 1.0]) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(3)
    p, q = rng.normal(size=3), rng.normal(size=3)
    om = unit(rng.normal(size=3))
    assert relkin.scattering_cos(p, q, -om) == pytest.approx(-relkin.scattering_cos(p, q, om), abs=1e-12)


def test_scattering_cos_forward():
    # in the center-of-momentum frame omega = p/|p| returns p' = p
    p = np.array([0.6, -1.1, 0.4])
    pp, qq = relkin.post_collision(p, -p, unit(p))
    np.testing.assert_allclose(pp, p, atol=1e-12)
    assert relkin.scattering_cos(p, -p, unit(p)) == pytest.approx(1.0, abs=1e-12)


def test_scattering_cos_degenerate():
    with pytest.raises(DegeneratePairError, match="degenerate pair"):
        relkin.scattering_cos([1.0, 2, 3], [1.0, 2, 3], [0, 0, 1.0])


def test_rotation_examples():
    np.testing.assert_allclose(relkin.rotation_taking([0, 0, 5.0]).matrix, np.eye(4), atol=1e-15)
    lam = relkin.rotation_taking([3.0, 4.0, 0.0])
    np.testing.assert_allclose(lam([0, 3.0, 4.0, 0]), [0, 0, 0, 5.0], atol=1e-12)
    with pytest.raises(ConfigError, match="undefined rotation target"):
        relkin.rotation_taking([0.0, 0.0, 0.0])


def test_boost_rejects_superluminal():
    with pytest.raises(ConfigError):
        relkin.boost_to([0.6, 0.8, 0.0])


@settings(max_examples=200)
@given(arrays(np.float64, 3, elements=st.floats(-0.7, 0.7)), momenta, momenta)
def test_boost_preserves_minkowski_product(u, p, q):
    lam = relkin.boost_to(u / max(1.0, np.linalg.norm(u) / 0.95))
    a, b = relkin.four_momentum(p), relkin.four_momentum(q)
    ref = relkin.minkowski_dot(a, b)
    assert relkin.minkowski_dot(lam(a), lam(b)) == pytest.approx(ref, rel=1e-12, abs=1e-9)
    assert lam.metric_defect() < 1e-9
    np.testing.assert_allclose(lam.inverse().matrix @ lam.matrix, np.eye(4), atol=1e-9)
