"""Inflow boundary data, the mild-form solution operator A on the slab, and
the damped fixed-point solver.

Fields are stored as arrays of shape (n_x, N): x1 nodes by momentum nodes.
When both boundary profiles are invariant under rotations about the p1 axis
the solver keeps one row per (radius, polar) ring and expands at the end.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import kve

from . import relkin
from .collision import CollisionOperator, Kernel, from_rings, is_axisymmetric, to_rings
from .errors import ConfigError, ConvergenceError, StateCorruptionError
from .norms import norm_L1Linf, norm_LinfL1, norm_main
from .quad import make_momentum_quadrature, make_sphere_quadrature

ENVELOPE_SLACK = 1e-12
DIVERGENCE_LIMIT = 1e6


def juttner(amplitude, temperature):
    def f(p):
        return amplitude * np.exp(-relkin.energy(p) / temperature)
    return f


def juttner_pressure(amplitude, temperature):
    """Pressure of A exp(-p0/T) over all of momentum space: 4 pi A T^2 K2(1/T)."""
    t = float(temperature)
    return 4.0 * np.pi * amplitude * t * t * kve(2, 1.0 / t) * np.exp(-1.0 / t)


@dataclass(frozen=True)
class BoundaryProfile:
    """Inflow data: f_L enters at x1 = 0 (p1 > 0), f_R at x1 = 1 (p1 < 0)."""

    f_L: Callable
    f_R: Callable
    params: dict = field(default_factory=dict)

    @classmethod
    def juttner(cls, T_L=1.0, T_R=1.0, A_L=1.0, A_R=1.0):
        for key, v in (("T_L", T_L), ("T_R", T_R)):
            if not v > 0:
                raise ConfigError(f"{key} must be positive", key=key)
        for key, v in (("A_L", A_L), ("A_R", A_R)):
            if not v >= 0:
                raise ConfigError(f"{key} must be >= 0", key=key)
        return cls(juttner(A_L, T_L), juttner(A_R, T_R),
                   {"T_L": T_L, "T_R": T_R, "A_L": A_L, "A_R": A_R})

    @classmethod
    def zero(cls):
        z = lambda p: np.zeros(np.shape(p)[:-1])  # noqa: E731
        return cls(z, z, {"A_L": 0.0, "A_R": 0.0})

    def samples(self, mq):
        return np.asarray(self.f_L(mq.nodes), dtype=float), np.asarray(self.f_R(mq.nodes), dtype=float)

    def scaled(self, eps):
        fl, fr = self.f_L, self.f_R
        params = dict(self.params)
        for key in ("A_L", "A_R"):
            if key in params:
                params[key] = params[key] * eps
        return BoundaryProfile(lambda p: eps * fl(p), lambda p: eps * fr(p), params)


def balanced_amplitude(A_L, T_L, T_R, mq=None):
    """A_R giving equal p1-momentum flux (pressure) on both sides.

    With ``mq`` the fluxes are the grid quadratures, so the discrete
    compatibility report is zero to round-off.
    """
    if mq is None:
        return A_L * juttner_pressure(1.0, T_L) / juttner_pressure(1.0, T_R)
    w = mq.weights * mq.nodes[:, 0] ** 2 / mq.energies
    return A_L * np.dot(w, np.exp(-mq.energies / T_L)) / np.dot(w, np.exp(-mq.energies / T_R))


def compatibility_check(bp, mq):
    """Flux mismatches int (1, p, p0) p1/p0 (f_L - f_R) dp, five components."""
    fl, fr = bp.samples(mq)
    test = np.concatenate([np.ones((len(mq), 1)), mq.nodes, mq.energies[:, None]], axis=1)
    w = mq.weights * mq.nodes[:, 0] / mq.energies
    return test.T @ (w * (fl - fr))


@dataclass(frozen=True)
class SolverConfig:
    k: float = 0.1
    c1: object = "auto"
    damping: float = 1.0
    tol: float = 1e-6
    max_iter: int = 200
    n_x: int = 33
    pmax: float = 12.0
    n_radial: int = 16
    n_polar: int = 8
    n_azimuth: int = 16
    sphere_polar: int = 12
    sphere_azimuth: int = 24
    c_kernel: float = 1.0
    gamma_ang: float = 0.0
    interp_temperature: float = 1.0
    backend: object = None
    threads: object = None

    def __post_init__(self):
        if not self.k > 0:
            raise ConfigError("k must be positive", key="k")
        if self.c1 != "auto" and not (isinstance(self.c1, (int, float)) and self.c1 > 0):
            raise ConfigError("c1 must be positive or 'auto'", key="c1")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]", key="damping")
        if not self.tol > 0:
            raise ConfigError("tol must be positive", key="tol")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError("max_iter must be a positive integer", key="max_iter")
        if int(self.n_x) != self.n_x or self.n_x < 2:
            raise ConfigError("n_x must be an integer >= 2", key="n_x")


@dataclass(frozen=True)
class PhaseGrid:
    x: np.ndarray
    mq: object

    @property
    def shape(self):
        return (len(self.x), len(self.mq))


def make_grid(cfg):
    mq = make_momentum_quadrature(cfg.pmax, cfg.n_radial, cfg.n_polar, cfg.n_azimuth,
                                  interp_temperature=cfg.interp_temperature)
    return PhaseGrid(np.linspace(0.0, 1.0, int(cfg.n_x)), mq)


def make_operator(cfg, mq):
    squad = make_sphere_quadrature(cfg.sphere_polar, cfg.sphere_azimuth)
    return CollisionOperator(mq, squad, Kernel(cfg.c_kernel, cfg.gamma_ang),
                             backend=cfg.backend, threads=cfg.threads)


@dataclass
class DistField:
    values: np.ndarray
    grid: PhaseGrid

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")


@dataclass
class ConvergenceTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    c1: float = float("nan")
    fixed_point_residual: float = float("nan")
    lower_bound_held: bool = True
    upper_bound_held: bool = True
    envelope_margin: float = float("nan")

    @property
    def iterations(self):
        return len(self.rows)

    def column(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)


class _Slab:
    """Reusable pieces of A for one grid, operator and boundary pair."""

    def __init__(self, grid, op, bp):
        self.grid = grid
        self.op = op
        mq = grid.mq
        fl, fr = bp.samples(mq)
        if np.any(fl < 0) or np.any(fr < 0):
            raise ConfigError("boundary data must be nonnegative")
        self.rings = is_axisymmetric(fl, mq) and is_axisymmetric(fr, mq)
        nodes = mq.nodes
        if self.rings:
            fl, fr = to_rings(fl, mq), to_rings(fr, mq)
            nodes = to_rings(nodes, mq)
            self.weights = mq.weights.reshape(mq.n_ring, -1).sum(axis=1)
        else:
            self.weights = mq.weights
        self.energies = relkin.energy(nodes)
        vel = nodes[:, 0] / self.energies
        if np.any(vel == 0.0):
            raise ConfigError("momentum grid has a node with p1 = 0")
        self.right = vel > 0
        self.inv_vel = 1.0 / np.abs(vel)
        self.f_L, self.f_R = fl, fr
        self.mq_full = mq

    def envelope(self, c1):
        x = self.grid.x[:, None]
        a = self.inv_vel[None, :]
        return np.where(self.right[None, :], self.f_L * np.exp(-c1 * x * a),
                        self.f_R * np.exp(-c1 * (1.0 - x) * a))

    def loss(self, f):
        return self.op.loss(f.T, rings=self.rings).T

    def gain(self, f):
        if self.rings:
            return self.op.gain(f.T, rings=True).T
        return self.op.gain(f.T).T

    def apply(self, f):
        """(Af, Lf) for a stored-layout field."""
        lf = self.loss(f)
        qp = self.gain(f)
        out = np.empty_like(f)
        r = self.right
        out[:, r] = _sweep(self.grid.x, lf[:, r], qp[:, r], self.f_L[r], self.inv_vel[r])
        l_ = ~r
        out[::-1, l_] = _sweep(1.0 - self.grid.x[::-1], lf[::-1, l_], qp[::-1, l_],
                               self.f_R[l_], self.inv_vel[l_])
        return out, lf

    def norm(self, f, k):
        dens = np.sqrt(self.energies) * np.exp(k * self.energies) * np.max(np.abs(f), axis=0)
        return float(np.dot(self.weights, dens))

    def expand(self, f):
        return from_rings(f.T, self.mq_full).T if self.rings else f


def _sweep(x, lf, qp, inflow, inv_vel):
    """Mild-form solution along characteristics entering at x[0].

    Af(x_i) = f_in e^{-I_i a} + a * trapz_j<=i e^{-(I_i - I_j) a} Q+_j with
    I the cumulative trapezoid integral of Lf and a = 1/|p1/p0|.
    """
    n = len(x)
    cum = cumulative_trapezoid(lf, x, axis=0, initial=0.0)  # (n, M)
    h = np.diff(x)
    # trapezoid weights for the integral over [x_0, x_i], node j
    tw = np.zeros((n, n))
    for i in range(1, n):
        tw[i, :i] += 0.5 * h[:i]
        tw[i, 1:i + 1] += 0.5 * h[:i]
    diff = cum[:, None, :] - cum[None, :, :]  # (i, j, M)
    mask = (np.arange(n)[:, None] >= np.arange(n)[None, :])[:, :, None]
    att = np.where(mask, np.exp(-np.where(mask, diff, 0.0) * inv_vel[None, None, :]), 0.0)
    src = inv_vel[None, :] * np.einsum("ij,ijm,jm->im", tw, att, qp)
    return inflow[None, :] * np.exp(-cum * inv_vel[None, :]) + src


def initial_field(bp, c1, grid):
    """The attenuated free-transport envelope, used as the first iterate."""
    if not c1 > 0:
        raise ConfigError("c1 must be positive", key="c1")
    slab = _Slab(grid, None, bp)
    return DistField(slab.expand(slab.envelope(c1)), grid)


def lower_envelope(bp, c1, grid):
    return initial_field(bp, c1, grid)


def boundary_collision_frequencies(bp, grid, op):
    """L f_L, L f_R and L(f_L + f_R) at every grid node, as columns."""
    fl, fr = bp.samples(grid.mq)
    cols = np.stack([fl, fr, fl + fr], axis=1)
    if is_axisymmetric(cols, grid.mq):
        return from_rings(op.loss(to_rings(cols, grid.mq), rings=True), grid.mq)
    return op.loss(cols)


def resolve_c1(cfg, bp, grid, op):
    """Configured c1, or the largest collision frequency of f_L + f_R.

    The first term of A is f_L exp(-I/p1hat) with I the integral of Lf, so
    the envelope is dominated whenever Lf <= c1 along the characteristic.  The
    automatic value makes that hold for fields bounded by f_L + f_R.
    """
    if cfg.c1 != "auto":
        return float(cfg.c1)
    lb = boundary_collision_frequencies(bp, grid, op)
    if not np.any(lb):
        return 1.0
    return float(lb[:, 2].max())


def apply_A(f, bp, cfg=None, op=None):
    """One application of the solution operator to a DistField."""
    cfg = cfg or SolverConfig()
    op = op or make_operator(cfg, f.grid.mq)
    slab = _Slab(f.grid, op, bp)
    vals = to_rings(f.values.T, f.grid.mq).T if slab.rings else f.values
    af, _ = slab.apply(vals)
    return DistField(slab.expand(af), f.grid)


def solve(cfg, bp, grid=None, op=None, progress=None):
    """Damped Picard iteration f <- (1 - lam) f + lam A f from the envelope.

    Returns ``(DistField, ConvergenceTrace)``.  Raises ConvergenceError after
    ``max_iter`` steps and StateCorruptionError on NaN or negative values.
    """
    grid = grid or make_grid(cfg)
    op = op or make_operator(cfg, grid.mq)
    slab = _Slab(grid, op, bp)
    c1 = resolve_c1(cfg, bp, grid, op)
    trace = ConvergenceTrace(c1=c1)
    lam = float(cfg.damping)
    sqrt_e = np.sqrt(slab.energies)
    mq = grid.mq

    f = slab.envelope(c1)
    nrm = slab.norm(f, cfg.k)
    prev_inc = None
    for it in range(1, int(cfg.max_iter) + 1):
        af, lf = slab.apply(f)
        min_l = float(lf.min())
        if min_l < c1:
            trace.lower_bound_held = False
        if float(lf.max()) > c1:
            trace.upper_bound_held = False
        f_new = (1.0 - lam) * f + lam * af
        if not np.all(np.isfinite(f_new)) or np.any(f_new < 0):
            raise StateCorruptionError(f"state corruption at iteration {it}", it, trace)
        inc = slab.norm(f_new - f, cfg.k)
        res = inc / nrm if nrm > 0 else (0.0 if inc == 0 else np.inf)
        full = slab.expand(f_new)
        row = {
            "iteration": it,
            "residual": res,
            "norm": slab.norm(f_new, cfg.k),
            "contraction": (inc / prev_inc) if prev_inc else None,
            "min_L_over_sqrt_p0": float((lf / sqrt_e[None, :]).min()),
            "min_L": min_l,
            "max_L": float(lf.max()),
            "norm_LinfL1": norm_LinfL1(full, mq),
            "norm_L1Linf": norm_L1Linf(full, mq),
        }
        trace.rows.append(row)
        if progress:
            progress(row)
        if res > DIVERGENCE_LIMIT:
            raise ConvergenceError(f"iteration diverged at step {it} (residual {res:.3g})", trace,
                                   DistField(slab.expand(f_new), grid))
        f, nrm, prev_inc = f_new, row["norm"], inc
        if res < cfg.tol:
            trace.converged = True
            break
    result = DistField(slab.expand(f), grid)
    if not trace.converged:
        raise ConvergenceError(f"no convergence in {cfg.max_iter} iterations", trace, result)
    af, _ = slab.apply(f)
    trace.fixed_point_residual = slab.norm(af - f, cfg.k) / nrm if nrm > 0 else 0.0
    env = slab.envelope(c1)
    trace.envelope_margin = float(np.min(f - env))
    return result, trace


def envelope_violation(f, bp, c1):
    """Largest amount by which f falls below the envelope, scaled by max envelope."""
    env = lower_envelope(bp, c1, f.grid).values
    scale = max(float(env.max()), 1e-300)
    return float(np.max(env - f.values)) / scale
