"""Sphere and truncated-momentum quadrature rules, grid interpolation, and
closed-form sphere integrals used as convergence oracles."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class SphereQuadrature:
    """Product rule on the unit sphere (polar axis = e3 of the rule's frame)."""

    nodes: np.ndarray
    weights: np.ndarray
    n_polar: int
    n_azimuth: int
    antipode: np.ndarray = field(repr=False)

    def integrate(self, values):
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))

    def __len__(self):
        return len(self.weights)


def make_sphere_quadrature(n_polar, n_azimuth):
    """Gauss-Legendre in cos(theta) times the periodic trapezoid rule in phi."""
    if int(n_polar) != n_polar or int(n_azimuth) != n_azimuth:
        raise ConfigError("sphere resolutions must be integers")
    n_polar, n_azimuth = int(n_polar), int(n_azimuth)
    if n_polar < 2 or n_azimuth < 4:
        raise ConfigError(f"sphere rule needs n_polar >= 2 and n_azimuth >= 4, got ({n_polar}, {n_azimuth})")
    mu, wmu = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    st = np.sqrt(1.0 - mu**2)
    nodes = np.stack(
        [
            np.outer(st, np.cos(phi)),
            np.outer(st, np.sin(phi)),
            np.outer(mu, np.ones(n_azimuth)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    weights = np.outer(wmu, np.full(n_azimuth, 2.0 * np.pi / n_azimuth)).ravel()
    # -omega sits at (n_polar-1-i, j + n_azimuth/2) when n_azimuth is even.
    if n_azimuth % 2 == 0:
        i, j = np.divmod(np.arange(n_polar * n_azimuth), n_azimuth)
        antipode = (n_polar - 1 - i) * n_azimuth + (j + n_azimuth // 2) % n_azimuth
    else:
        antipode = np.full(n_polar * n_azimuth, -1)
    return SphereQuadrature(nodes, weights, n_polar, n_azimuth, antipode)


@dataclass(frozen=True)
class MomentumQuadrature:
    """Spherical-polar product rule on the ball |p| <= pmax.

    The polar axis is e1, so ``p1 = r * mu``; node order is C-order over
    (radial, polar, azimuthal) indices.  ``interp_temperature`` selects the
    interpolation weight exp(p0 / T) (``None`` gives plain trilinear).
    """

    pmax: float
    radii: np.ndarray
    mus: np.ndarray
    phis: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    node_radius: np.ndarray
    energies: np.ndarray
    interp_temperature: float = 1.0

    @property
    def shape(self):
        return (len(self.radii), len(self.mus), len(self.phis))

    @property
    def n_ring(self):
        return len(self.radii) * len(self.mus)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))

    @property
    def inv_temperature(self):
        return 0.0 if self.interp_temperature is None else 1.0 / self.interp_temperature

    def interp_weight(self, e):
        return np.exp(np.asarray(e) * self.inv_temperature)

    def local_h(self):
        """Per-node mesh size: cube root of the cell volume the node carries."""
        return np.cbrt(self.weights)

    def interpolate(self, values, points):
        """Evaluate grid data at arbitrary momenta.

        Trilinear in (radius, cos theta, phi) index space applied to
        ``values * exp(p0/T)``, then divided by exp(p0/T) at the target.  Values
        are held constant beyond the outermost radial/polar nodes and are zero
        for |p| > pmax.
        """
        values = np.asarray(values, dtype=float)
        idx, w = self.stencil(points)
        wv = values * (self.interp_weight(self.energies) if values.ndim == 1
                       else self.interp_weight(self.energies)[:, None])
        gathered = wv[idx]
        if values.ndim == 1:
            out = np.einsum("...k,...k->...", gathered, w)
        else:
            out = np.einsum("...kc,...k->...c", gathered, w)
        pts = np.asarray(points, dtype=float)
        e = np.sqrt(1.0 + np.einsum("...i,...i->...", pts, pts))
        scale = 1.0 / self.interp_weight(e)
        return out * (scale if values.ndim == 1 else scale[..., None])

    def stencil(self, points):
        """Node indices and weights (8 per point) of the interpolation stencil."""
        pts = np.asarray(points, dtype=float)
        r = np.sqrt(np.einsum("...i,...i->...", pts, pts))
        safe = np.where(r > 0.0, r, 1.0)
        mu = np.where(r > 0.0, pts[..., 0] / safe, 0.0)
        phi = np.arctan2(pts[..., 2], pts[..., 1])
        ir, tr = _cell(self.radii, r)
        im, tm = _cell(self.mus, mu)
        nphi = len(self.phis)
        u = np.mod((phi - self.phis[0]) * nphi / (2.0 * np.pi), nphi)
        jp = np.minimum(np.floor(u).astype(np.int64), nphi - 1)
        tp = u - jp
        jp1 = (jp + 1) % nphi
        nm = len(self.mus)
        inside = (r <= self.pmax).astype(float)
        idx = []
        wts = []
        for a, wa in ((ir, 1.0 - tr), (ir + 1, tr)):
            for b, wb in ((im, 1.0 - tm), (im + 1, tm)):
                for c, wc in ((jp, 1.0 - tp), (jp1, tp)):
                    idx.append((a * nm + b) * nphi + c)
                    wts.append(wa * wb * wc * inside)
        return np.stack(idx, axis=-1), np.stack(wts, axis=-1)


def _cell(nodes, x):
    """Lower cell index and fractional offset, clamped to the node range."""
    n = len(nodes)
    i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, n - 2)
    t = (np.clip(x, nodes[0], nodes[-1]) - nodes[i]) / (nodes[i + 1] - nodes[i])
    return i, t


def make_momentum_quadrature(pmax, n_radial, n_polar, n_azimuth, interp_temperature=1.0):
    """Gauss-Legendre radial nodes on (0, pmax] with r^2 Jacobian, Gauss-Legendre
    in cos(theta) about the p1 axis, periodic trapezoid in phi.

    ``n_polar`` must be even so that no node lies on the plane p1 = 0.
    """
    if not pmax > 0:
        raise ConfigError(f"pmax must be positive, got {pmax}", key="pmax")
    for key, n, lo in (("n_radial", n_radial, 2), ("n_polar", n_polar, 2), ("n_azimuth", n_azimuth, 2)):
        if int(n) != n or n < lo:
            raise ConfigError(f"{key} must be an integer >= {lo}, got {n}", key=key)
    if n_polar % 2:
        raise ConfigError("n_polar must be even so that no node has p1 = 0", key="n_polar")
    if interp_temperature is not None and not interp_temperature > 0:
        raise ConfigError("interp_temperature must be positive", key="interp_temperature")
    x, wx = np.polynomial.legendre.leggauss(int(n_radial))
    radii = 0.5 * pmax * (x + 1.0)
    wr = 0.5 * pmax * wx * radii**2
    mus, wmu = np.polynomial.legendre.leggauss(int(n_polar))
    phis = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    wphi = np.full(int(n_azimuth), 2.0 * np.pi / n_azimuth)

    R, M, P = np.meshgrid(radii, mus, phis, indexing="ij")
    st = np.sqrt(1.0 - M**2)
    nodes = np.stack([R * M, R * st * np.cos(P), R * st * np.sin(P)], axis=-1).reshape(-1, 3)
    weights = (wr[:, None, None] * wmu[None, :, None] * wphi[None, None, :]).ravel()
    node_radius = R.ravel().copy()
    energies = np.sqrt(1.0 + node_radius**2)
    return MomentumQuadrature(
        pmax=float(pmax), radii=radii, mus=mus, phis=phis, nodes=nodes, weights=weights,
        node_radius=node_radius, energies=energies, interp_temperature=interp_temperature,
    )


def sphere_inv_distance(a):
    """Closed form of the sphere integral of 1/|omega - a|: 4pi inside the
    unit ball, 4pi/|a| outside."""
    r = float(np.linalg.norm(np.asarray(a, dtype=float)))
    return FOUR_PI if r <= 1.0 else FOUR_PI / r


def sphere_exp(c, v):
    """Closed form of the sphere integral of exp(c omega.v): 4pi sinh(x)/x, x = c|v|."""
    x = abs(float(c)) * float(np.linalg.norm(np.asarray(v, dtype=float)))
    if x < 1e-6:
        return FOUR_PI * (1.0 + x * x / 6.0)
    return FOUR_PI * np.sinh(x) / x
