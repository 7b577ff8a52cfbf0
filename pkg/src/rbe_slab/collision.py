"""Hard-sphere collision kernel, loss operator L, gain term Q+, and the
coercivity / continuity / conservation diagnostics built on them.

Grid data is passed as *tables*: rows index momentum nodes of a
:class:`~rbe_slab.quad.MomentumQuadrature` (C-order over radius, polar,
azimuth) and optional trailing columns index anything else, typically x1
nodes.  A table that does not depend on the azimuth can be stored as *rings*,
one row per (radius, polar) pair, which is how the solver keeps its state.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from . import kernels, relkin
from .errors import ConfigError, RatioUndefinedError

AXISYM_RTOL = 1e-12
_ROW_CHUNK = 256


@dataclass(frozen=True)
class Kernel:
    """sigma(g, theta) = c_kernel * g * sigma0(theta), sigma0 = sin^gamma(theta) / (4 pi)."""

    c_kernel: float = 1.0
    gamma_ang: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.c_kernel) and self.c_kernel >= 0):
            raise ConfigError("c_kernel must be finite and >= 0", key="c_kernel")
        if not (np.isfinite(self.gamma_ang) and self.gamma_ang >= 0):
            raise ConfigError("gamma_ang must be finite and >= 0", key="gamma_ang")

    @property
    def c0(self):
        """Sphere integral of sigma0; 1 for the isotropic kernel."""
        a = 0.5 * self.gamma_ang
        return float(0.5 * np.sqrt(np.pi) * np.exp(gammaln(a + 1.0) - gammaln(a + 1.5)))

    def sigma0(self, cos_theta):
        c = np.clip(np.asarray(cos_theta, dtype=float), -1.0, 1.0)
        return (1.0 - c * c) ** (0.5 * self.gamma_ang) / (4.0 * np.pi)


def loss_weights(points, mq, kernel):
    """Matrix K with (K @ f)[m] = Lf(points[m]) for grid values f."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(points), len(mq)))
    scale = kernel.c0 * kernel.c_kernel
    for i in range(0, len(points), _ROW_CHUNK):
        p = points[i:i + _ROW_CHUNK, None, :]
        s, g = relkin.invariants(p, mq.nodes[None, :, :])
        vm = g * np.sqrt(s) / (2.0 * relkin.energy(p) * mq.energies[None, :])
        out[i:i + _ROW_CHUNK] = scale * mq.weights[None, :] * vm * g
    return out


def ring_points(mq):
    """One representative node (azimuth index 0) per ring."""
    return mq.nodes.reshape(mq.n_ring, len(mq.phis), 3)[:, 0, :]


def to_rings(table, mq):
    table = np.asarray(table)
    return table.reshape((mq.n_ring, len(mq.phis)) + table.shape[1:])[:, 0]


def from_rings(ring_table, mq):
    return np.repeat(np.asarray(ring_table), len(mq.phis), axis=0)


def is_axisymmetric(table, mq, rtol=AXISYM_RTOL):
    """True when the table is invariant under rotations about the p1 axis."""
    table = np.asarray(table, dtype=float)
    blocks = table.reshape((mq.n_ring, len(mq.phis), -1))
    scale = np.max(np.abs(table), initial=0.0)
    return bool(np.max(np.abs(blocks - blocks[:, :1]), initial=0.0) <= rtol * scale)


class CollisionOperator:
    """L and Q+ on a fixed momentum grid, with cached loss matrices.

    ``loss`` and ``gain`` accept full tables (rows = grid nodes) or ring
    tables (rows = rings, ``rings=True``) and return the same layout.
    """

    def __init__(self, mq, squad, kernel=None, backend=None, threads=None):
        self.mq = mq
        self.squad = squad
        self.kernel = kernel or Kernel()
        self.backend = backend
        self.threads = threads

    @cached_property
    def loss_matrix(self):
        return loss_weights(self.mq.nodes, self.mq, self.kernel)

    @cached_property
    def ring_loss_matrix(self):
        mq = self.mq
        k = loss_weights(ring_points(mq), mq, self.kernel)
        return k.reshape(mq.n_ring, mq.n_ring, len(mq.phis)).sum(axis=-1)

    def loss(self, table, rings=False):
        k = self.ring_loss_matrix if rings else self.loss_matrix
        return k @ np.asarray(table, dtype=float)

    def gain(self, table_f, table_h=None, rings=False):
        """Q+(f, h) at every grid node (or ring representative)."""
        f = np.asarray(table_f, dtype=float)
        h = f if table_h is None else np.asarray(table_h, dtype=float)
        vec = f.ndim == 1
        f2 = f[:, None] if vec else f
        h2 = h[:, None] if vec else h
        symmetric = table_h is None or table_h is table_f
        if rings:
            out = self._gain(ring_points(self.mq), f2, h2, True, symmetric)
        elif is_axisymmetric(f2, self.mq) and is_axisymmetric(h2, self.mq):
            rf, rh = to_rings(f2, self.mq), to_rings(h2, self.mq)
            out = from_rings(self._gain(ring_points(self.mq), rf, rh, True, symmetric), self.mq)
        else:
            out = self._gain(self.mq.nodes, f2, h2, False, symmetric)
        return out[:, 0] if vec else out

    def gain_at(self, points, slice_f, slice_h=None):
        """Q+(f, h) at arbitrary momenta for one-column grid data."""
        f = np.asarray(slice_f, dtype=float)
        h = f if slice_h is None else np.asarray(slice_h, dtype=float)
        symmetric = slice_h is None or slice_h is slice_f
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if is_axisymmetric(f, self.mq) and is_axisymmetric(h, self.mq):
            out = self._gain(pts, to_rings(f, self.mq)[:, None], to_rings(h, self.mq)[:, None],
                             True, symmetric)
        else:
            out = self._gain(pts, f[:, None], h[:, None], False, symmetric)
        return out[:, 0]

    def _gain(self, points, f, h, axisym, symmetric):
        k = self.kernel
        return kernels.qplus_table(points, f, h, self.mq, self.squad, k.c_kernel, k.gamma_ang,
                                   axisym, symmetric=symmetric, backend=self.backend,
                                   threads=self.threads)


def eval_L(slice_f, p, mq, kernel):
    """Lf(p) = c0 c_kernel sum_q w_q v_M(p, q) g(p, q) f(q)."""
    p = np.asarray(p, dtype=float)
    val = loss_weights(p.reshape(-1, 3), mq, kernel) @ np.asarray(slice_f, dtype=float)
    return val[0] if p.ndim == 1 else val


def eval_Qplus(slice_f, slice_h, p, mq, squad, kernel, backend=None):
    p = np.asarray(p, dtype=float)
    op = CollisionOperator(mq, squad, kernel, backend=backend)
    val = op.gain_at(p.reshape(-1, 3), slice_f, slice_h)
    return val[0] if p.ndim == 1 else val


def eval_Qminus(slice_f, slice_h, p, mq, kernel):
    """Q-(f, h)(p) = f(p) * Lh(p); f is interpolated when p is off the grid."""
    p = np.asarray(p, dtype=float)
    fp = mq.interpolate(slice_f, p.reshape(-1, 3))
    val = fp * eval_L(slice_h, p.reshape(-1, 3), mq, kernel)
    return val[0] if p.ndim == 1 else val


def coercivity_scan(values, mq, kernel, op=None):
    """(min, max) over the grid of Lf / sqrt(p0) for a field of shape (n_x, N)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if not np.any(values):
        raise RatioUndefinedError("coercivity undefined for vacuum")
    op = op or CollisionOperator(mq, None, kernel)
    ratio = op.loss(values.T) / np.sqrt(mq.energies)[:, None]
    return float(ratio.min()), float(ratio.max())


def continuity_check(f, h, k, mq, kernel, op=None):
    """Measured constant in |Lf - Lh| <= C e^{-k/sqrt2} sqrt(p0) ||f - h||.

    ``ratio`` is max |Lf - Lh| / (sqrt(p0) ||f - h||); ``constant`` multiplies
    it by e^{k/sqrt2}.  Both are 0 when f == h.
    """
    from .norms import norm_main

    d = np.atleast_2d(np.asarray(f, dtype=float) - np.asarray(h, dtype=float))
    nd = norm_main(d, mq, k)
    if nd == 0.0:
        return {"ratio": 0.0, "constant": 0.0}
    op = op or CollisionOperator(mq, None, kernel)
    dl = np.abs(op.loss(d.T)) / np.sqrt(mq.energies)[:, None]
    ratio = float(dl.max() / nd)
    return {"ratio": ratio, "constant": ratio * float(np.exp(k / np.sqrt(2.0)))}


def moment_residuals(slice_f, mq, squad, kernel, op=None):
    """Integrals of Q(f, f) against (1, p1, p2, p3, p0) on the grid."""
    f = np.asarray(slice_f, dtype=float)
    if not np.any(f):
        return np.zeros((5,) + f.shape[1:])
    op = op or CollisionOperator(mq, squad, kernel)
    q = op.gain(f) - f * op.loss(f)
    test = np.concatenate([np.ones((len(mq), 1)), mq.nodes, mq.energies[:, None]], axis=1)
    return np.tensordot(test * mq.weights[:, None], q, axes=(0, 0))
