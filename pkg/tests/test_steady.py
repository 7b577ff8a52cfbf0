import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbe_slab import relkin, steady
from rbe_slab.quad import make_momentum_quadrature
from rbe_slab.errors import ConfigError, ConvergenceError

RING_ULP = 4e-16 * 8
SMALL = dict(n_x=9, pmax=8.0, n_radial=8, n_polar=4, n_azimuth=8, sphere_polar=6, sphere_azimuth=12)


@pytest.fixture(scope="module")
def cfg():
    return steady.SolverConfig(**SMALL)


@pytest.fixture(scope="module")
def grid(cfg):
    return steady.make_grid(cfg)


@pytest.fixture(scope="module")
def op(cfg, grid):
    return steady.make_operator(cfg, grid.mq)


def flow(grid, amp=0.01):
    a_r = steady.balanced_amplitude(amp, 1.0, 1.25, grid.mq)
    return steady.BoundaryProfile.juttner(1.0, 1.25, amp, a_r)


@pytest.fixture(scope="module")
def solved(cfg, grid, op):
    return steady.solve(cfg, flow(grid), grid=grid, op=op)


@pytest.mark.parametrize("kw", [dict(k=0.0), dict(tol=-1.0), dict(damping=1.5), dict(c1=-2.0),
                                dict(max_iter=0), dict(n_x=1)])
def test_solver_config_validation(kw):
    with pytest.raises(ConfigError) as exc:
        steady.SolverConfig(**kw)
    assert exc.value.key == next(iter(kw))


def test_boundary_profile_validation():
    with pytest.raises(ConfigError):
        steady.BoundaryProfile.juttner(T_L=0.0)
    with pytest.raises(ConfigError):
        steady.BoundaryProfile.juttner(A_R=-1.0)


def test_compatibility_identical_sides(grid):
    bp = steady.BoundaryProfile.juttner(1.3, 1.3, 0.7, 0.7)
    assert np.max(np.abs(steady.compatibility_check(bp, grid.mq))) < 1e-12


def test_compatibility_one_sided(grid):
    j = steady.juttner(1.0, 1.0)
    z = lambda p: np.zeros(np.shape(p)[:-1])  # noqa: E731
    c = steady.compatibility_check(steady.BoundaryProfile(z, j), grid.mq)
    scale = np.max(np.abs(c))
    # mass flux of an isotropic profile vanishes; the p1 flux (pressure) does not
    assert abs(c[0]) < 1e-12 * scale
    assert c[1] < 0
    c2 = steady.compatibility_check(steady.BoundaryProfile(z, lambda p: 2 * j(p)), grid.mq)
    np.testing.assert_array_equal(c2, 2 * c)


def test_balanced_amplitude(grid):
    bp = flow(grid, 0.3)
    assert abs(steady.compatibility_check(bp, grid.mq)[1]) < 1e-14
    wide = make_momentum_quadrature(40.0, 48, 8, 4)
    exact = steady.balanced_amplitude(0.3, 1.0, 1.25)
    assert steady.balanced_amplitude(0.3, 1.0, 1.25, wide) == pytest.approx(exact, rel=1e-9)


def test_juttner_pressure_matches_quadrature():
    mq = make_momentum_quadrature(40.0, 48, 8, 4)
    for t in (0.7, 1.0, 1.25):
        num = mq.integrate(mq.nodes[:, 0] ** 2 / mq.energies * np.exp(-mq.energies / t))
        assert steady.juttner_pressure(1.0, t) == pytest.approx(num, rel=1e-9)


def test_initial_field(grid):
    bp = flow(grid)
    c1 = 0.8
    f0 = steady.initial_field(bp, c1, grid).values
    fl, fr = bp.samples(grid.mq)
    p1 = grid.mq.nodes[:, 0]
    right = p1 > 0
    # ring-reduced fields carry one value per (radius, polar) ring: equal to f_L up to an ulp
    np.testing.assert_allclose(f0[0, right], fl[right], rtol=RING_ULP)
    p1hat = relkin.hat(grid.mq.nodes)[:, 0]
    np.testing.assert_allclose(f0[-1, right], fl[right] * np.exp(-c1 / p1hat[right]), rtol=1e-14)
    np.testing.assert_allclose(f0[-1, ~right], fr[~right], rtol=RING_ULP)
    z = steady.initial_field(steady.BoundaryProfile.zero(), c1, grid).values
    assert not np.any(z)


def test_apply_A_zero(cfg, grid, op):
    zero = steady.DistField(np.zeros(grid.shape), grid)
    out = steady.apply_A(zero, steady.BoundaryProfile.zero(), cfg, op)
    assert not np.any(out.values)
    bp = flow(grid)
    out = steady.apply_A(zero, bp, cfg, op).values
    fl, fr = bp.samples(grid.mq)
    p1 = grid.mq.nodes[:, 0]
    expect = np.where(p1 > 0, fl, fr)
    np.testing.assert_allclose(out, np.broadcast_to(expect, out.shape), rtol=RING_ULP)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_apply_A_nonnegative_and_respects_inflow(seed):
    cfg = steady.SolverConfig(**SMALL)
    grid = steady.make_grid(cfg)
    rng = np.random.default_rng(seed)
    vals = 0.01 * rng.random(grid.shape)
    bp = flow(grid)
    out = steady.apply_A(steady.DistField(vals, grid), bp, cfg).values
    assert np.all(out >= 0)
    fl, fr = bp.samples(grid.mq)
    p1 = grid.mq.nodes[:, 0]
    np.testing.assert_allclose(out[0, p1 > 0], fl[p1 > 0], rtol=RING_ULP)
    np.testing.assert_allclose(out[-1, p1 < 0], fr[p1 < 0], rtol=RING_ULP)


def test_apply_A_keeps_envelope(cfg, grid, op):
    bp = flow(grid)
    c1 = steady.resolve_c1(cfg, bp, grid, op)
    f0 = steady.initial_field(bp, c1, grid)
    af = steady.apply_A(f0, bp, cfg, op)
    assert steady.envelope_violation(af, bp, c1) <= steady.ENVELOPE_SLACK


def test_solve_vacuum(cfg):
    f, trace = steady.solve(cfg, steady.BoundaryProfile.zero())
    assert trace.iterations == 1 and trace.converged
    assert not np.any(f.values)


def test_solve_converges(cfg, solved):
    f, trace = solved
    assert trace.converged
    assert trace.fixed_point_residual < 2 * cfg.tol
    assert np.all(f.values >= 0)
    assert trace.envelope_margin >= -steady.ENVELOPE_SLACK
    r = [x for x in trace.column("contraction")[2:]]
    assert max(r) < 1
    for row in trace.rows:
        assert row["norm_LinfL1"] <= row["norm_L1Linf"] <= row["norm"]


def test_halving_tol_adds_expected_iterations(cfg, grid, op, solved):
    _, trace = solved
    r = trace.column("contraction")[-1]
    half = steady.SolverConfig(**{**SMALL, "tol": cfg.tol / 2})
    _, t2 = steady.solve(half, flow(grid), grid=grid, op=op)
    expected = np.log(2) / abs(np.log(r))
    assert abs((t2.iterations - trace.iterations) - expected) <= 1.0


def test_weaker_boundaries_need_fewer_iterations(cfg, grid, op):
    base = flow(grid)
    its = [steady.solve(cfg, base.scaled(eps), grid=grid, op=op)[1].iterations for eps in (1.0, 0.1, 0.01)]
    assert its[0] >= its[1] >= its[2]


def test_thread_count_does_not_change_result(grid):
    a = steady.solve(steady.SolverConfig(**SMALL, threads=1), flow(grid))[0].values
    b = steady.solve(steady.SolverConfig(**SMALL, threads=3), flow(grid))[0].values
    np.testing.assert_array_equal(a, b)


def test_max_iter_raises_with_trace(grid):
    cfg = steady.SolverConfig(**{**SMALL, "max_iter": 2})
    with pytest.raises(ConvergenceError) as exc:
        steady.solve(cfg, flow(grid))
    assert exc.value.trace.iterations == 2
    assert exc.value.field is not None


def test_strong_boundaries_hit_divergence_guard(grid):
    cfg = steady.SolverConfig(**SMALL)
    with pytest.raises(ConvergenceError, match="diverged"):
        steady.solve(cfg, steady.BoundaryProfile.juttner(1.0, 1.25, 1.0, 1.0))


def test_distfield_shape_checked(grid):
    with pytest.raises(ValueError):
        steady.DistField(np.zeros((3, 4)), grid)
