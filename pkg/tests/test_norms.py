import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as adaptive_quad

from rbe_slab import collision, norms, quad
from rbe_slab.errors import RatioUndefinedError

K = 0.1


@pytest.fixture(scope="module")
def mq():
    return quad.make_momentum_quadrature(12.0, 16, 8, 16)


@pytest.fixture(scope="module")
def op_small():
    mq = quad.make_momentum_quadrature(8.0, 8, 4, 8)
    return collision.CollisionOperator(mq, quad.make_sphere_quadrature(6, 12), collision.Kernel())


def random_field(seed, n_x, mq):
    rng = np.random.default_rng(seed)
    return rng.random((n_x, len(mq))) * np.exp(-mq.energies)[None, :]


def test_zero_field(mq):
    z = np.zeros((3, len(mq)))
    assert norms.norm_main(z, mq, K) == 0.0
    assert norms.norm_LinfL1(z, mq) == 0.0
    assert norms.norm_L1Linf(z, mq) == 0.0
    assert norms.norm_inv(z, mq, K)[0] == 0.0
    assert norms.norm_hyp(z, mq, K)[0] == 0.0


def test_norm_main_radial_oracle(mq):
    g = np.array([0.2, 1.0, 0.5])
    f = g[:, None] * np.exp(-2 * K * mq.energies)[None, :]
    ref = 4 * np.pi * adaptive_quad(
        lambda r: r * r * (1 + r * r) ** 0.25 * np.exp(-K * np.sqrt(1 + r * r)), 0, 12,
        epsabs=0, epsrel=1e-13)[0]
    assert norms.norm_main(f, mq, K) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3))
def test_homogeneity_and_triangle(seed, lam):
    m = quad.make_momentum_quadrature(6.0, 6, 4, 6)
    f = random_field(seed, 4, m)
    h = random_field(seed + 1, 4, m) - 0.5 * np.exp(-m.energies)
    for fn in (lambda v: norms.norm_main(v, m, K), lambda v: norms.norm_LinfL1(v, m),
               lambda v: norms.norm_L1Linf(v, m)):
        assert fn(lam * f) == pytest.approx(abs(lam) * fn(f), rel=1e-12)
        assert fn(f + h) <= (fn(f) + fn(h)) * (1 + 1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_norm_ordering(seed, n_x):
    m = quad.make_momentum_quadrature(6.0, 6, 4, 6)
    f = random_field(seed, n_x, m)
    assert norms.norm_LinfL1(f, m) <= norms.norm_L1Linf(f, m) <= norms.norm_main(f, m, K)


def test_norm_inv_radial_centers_at_origin(mq):
    f = np.exp(-mq.energies)[None, :].repeat(2, axis=0)
    val, a = norms.norm_inv(f, mq, K)
    assert val > 0
    assert np.linalg.norm(a) <= np.max(mq.local_h()[mq.node_radius < 1.0]) + mq.radii[0]


def test_norm_inv_single_node(mq):
    i = 700
    f = np.zeros(len(mq))
    f[i] = 1.0
    val, a = norms.norm_inv(f, mq, K)
    w, e, h = mq.weights[i], mq.energies[i], mq.local_h()[i]
    assert np.isfinite(val)
    assert val == pytest.approx(w * np.sqrt(e) * np.exp(K * e) * 1.5 / h, rel=1e-12)


def test_norm_hyp_requires_three_normals(mq):
    with pytest.raises(ValueError):
        norms.norm_hyp(np.exp(-mq.energies), mq, K, n_normals=2)


def test_norm_hyp_radial_plane_independent(mq):
    f = np.exp(-mq.energies)
    vals = [norms.plane_integral(f, mq, n, K) for n in norms.fibonacci_half_sphere(16)]
    assert np.ptp(vals) <= 1e-6 * np.max(vals)


def test_norm_hyp_prefers_planes_containing_p1_axis(mq):
    # mass concentrated near the p1 axis
    perp = np.hypot(mq.nodes[:, 1], mq.nodes[:, 2])
    f = np.exp(-mq.energies - 4 * perp**2)
    val, n = norms.norm_hyp(f, mq, K)
    assert abs(n[0]) < 0.2
    e1_plane = norms.plane_integral(f, mq, [0.0, 0.0, 1.0], K)
    e1_normal = norms.plane_integral(f, mq, [1.0, 0.0, 0.0], K)
    assert e1_plane > e1_normal
    assert val >= e1_plane * (1 - 1e-12)


def test_gain_ratios_zero_field(op_small):
    z = np.zeros((2, len(op_small.mq)))
    with pytest.raises(RatioUndefinedError):
        norms.gain_ratio_inv(z, op_small, K)
    with pytest.raises(RatioUndefinedError):
        norms.gain_ratio_pointwise(z, op_small, [0.05])
    with pytest.raises(RatioUndefinedError):
        norms.gain_ratio_hyp(z, op_small, K)


def test_gain_ratios_scale_invariant(op_small):
    mq = op_small.mq
    f = np.exp(-mq.energies)[None, :] * np.array([[1.0], [0.6]])
    r1 = norms.gain_ratio_inv(f, op_small, K)
    r2 = norms.gain_ratio_pointwise(f, op_small, [0.05, 0.1, 0.2])
    rh = norms.gain_ratio_hyp(f, op_small, K)
    assert norms.gain_ratio_inv(0.5 * f, op_small, K) == pytest.approx(r1, rel=1e-10)
    np.testing.assert_allclose(norms.gain_ratio_pointwise(0.5 * f, op_small, [0.05, 0.1, 0.2]), r2,
                               rtol=1e-10)
    assert norms.gain_ratio_hyp(0.5 * f, op_small, K) == pytest.approx(rh, rel=1e-10)


def test_norm_report(op_small):
    mq = op_small.mq
    f = np.exp(-mq.energies)[None, :].repeat(3, axis=0)
    rep = norms.norm_report(f, op_small, K, k_list=[0.05, 0.1])
    d = rep.as_dict()
    assert d["norm_LinfL1"] <= d["norm_L1Linf"] <= d["norm_main"]
    assert len(d["R2"]) == 2 and all(np.isfinite(d["R2"]))
    empty = norms.norm_report(np.zeros_like(f), op_small, K, k_list=[0.05, 0.1]).as_dict()
    assert empty["R1"] is None and empty["R2"] == [None, None] and empty["norm_main"] == 0.0
