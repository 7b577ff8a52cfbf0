"""Special-relativistic two-body kinematics in natural units (m = c = 1).

Momenta are plain float arrays whose last axis has length 3; every function
broadcasts over the leading axes.  Four-vectors carry the time component
first, and the metric is ``diag(-1, 1, 1, 1)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegeneratePairError

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


def _vec(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError(f"expected a 3-vector along the last axis, got shape {p.shape}")
    return p


def energy(p):
    """On-shell energy sqrt(1 + |p|^2)."""
    p = _vec(p)
    return np.sqrt(1.0 + np.einsum("...i,...i->...", p, p))


def hat(p):
    """Particle velocity p / p0; always strictly subluminal."""
    p = _vec(p)
    return p / energy(p)[..., None]


def four_momentum(p):
    """Lift a 3-momentum onto the mass shell."""
    p = _vec(p)
    return np.concatenate([energy(p)[..., None], p], axis=-1)


def minkowski_dot(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return -a[..., 0] * b[..., 0] + np.einsum("...i,...i->...", a[..., 1:], b[..., 1:])


def _minus_pq(p, q):
    # -p^mu q_mu = p0 q0 - p.q  (>= 1 on shell)
    return energy(p) * energy(q) - np.einsum("...i,...i->...", p, q)


def invariants(p, q):
    """Return ``(s, g)`` for the pair.

    s = 2(-p.q + 1) and g = sqrt(2(-p.q - 1)).  The radicand of ``g`` is
    clamped at zero so that ``p == q`` gives exactly ``g = 0``.
    """
    p, q = _vec(p), _vec(q)
    # |p - q|^2 - (p0 - q0)^2 equals 2(-p.q - 1) but keeps accuracy near p = q.
    d = p - q
    p0, q0 = energy(p), energy(q)
    de = (np.einsum("...i,...i->...", d, d) - (p0 - q0) ** 2)
    g2 = np.maximum(de, 0.0)
    g = np.sqrt(g2)
    s = g2 + 4.0
    return s, g


def moller_velocity(p, q):
    """Moller velocity from the root expression |v_p - v_q|^2 - |v_p x v_q|^2.

    Equal to g sqrt(s) / (2 p0 q0) with the relative momentum ``g`` used here.
    """
    vp, vq = hat(p), hat(q)
    d = vp - vq
    c = np.cross(vp, vq)
    rad = np.einsum("...i,...i->...", d, d) - np.einsum("...i,...i->...", c, c)
    return np.sqrt(np.maximum(rad, 0.0))


def moller_velocity_product(p, q):
    """g sqrt(s) / (2 p0 q0), the closed form matching :func:`moller_velocity`."""
    s, g = invariants(p, q)
    return g * np.sqrt(s) / (2.0 * energy(p) * energy(q))


@dataclass(frozen=True)
class CollisionPair:
    p: np.ndarray
    q: np.ndarray
    s: float
    g: float
    v_moller: float


def collision_pair(p, q):
    p, q = _vec(p), _vec(q)
    s, g = invariants(p, q)
    return CollisionPair(p=p, q=q, s=s, g=g, v_moller=moller_velocity(p, q))


def post_collision(p, q, omega):
    """Post-collisional momenta in the center-of-momentum parametrisation.

    The boost correction is written as
    ``(p+q) ((p+q).omega) / (sqrt(s) (p0 + q0 + sqrt(s)))``, which equals
    ``(gamma - 1)(p+q)((p+q).omega)/|p+q|^2`` and stays finite as p + q -> 0,
    where it reduces to p' = (p+q)/2 + (g/2) omega.
    """
    p, q, omega = _vec(p), _vec(q), _vec(omega)
    s, g = invariants(p, q)
    tot = p + q
    e_tot = energy(p) + energy(q)
    rs = np.sqrt(s)
    proj = np.einsum("...i,...i->...", tot, omega) / (rs * (e_tot + rs))
    d = 0.5 * g[..., None] * (omega + proj[..., None] * tot)
    half = 0.5 * tot
    return half + d, half - d


def post_collision_energies(p, q, omega):
    """Closed-form post-collisional energies (p'0, q'0)."""
    p, q, omega = _vec(p), _vec(q), _vec(omega)
    s, g = invariants(p, q)
    mean = 0.5 * (energy(p) + energy(q))
    shift = g / (2.0 * np.sqrt(s)) * np.einsum("...i,...i->...", omega, p + q)
    return mean + shift, mean - shift


def scattering_cos(p, q, omega):
    """cos(theta) = (p - q)^mu (p' - q')_mu / g^2, clamped to [-1, 1]."""
    p, q, omega = _vec(p), _vec(q), _vec(omega)
    s, g = invariants(p, q)
    if np.any(g == 0.0):
        raise DegeneratePairError("degenerate pair: g = 0, scattering angle undefined")
    pp, qq = post_collision(p, q, omega)
    a = four_momentum(p) - four_momentum(q)
    b = four_momentum(pp) - four_momentum(qq)
    return np.clip(minkowski_dot(a, b) / g**2, -1.0, 1.0)


@dataclass(frozen=True)
class LorentzTransform:
    matrix: np.ndarray

    def __call__(self, v):
        return np.einsum("ij,...j->...i", self.matrix, np.asarray(v, dtype=float))

    def inverse(self):
        # Lambda^-1 = eta Lambda^T eta
        return LorentzTransform(ETA @ self.matrix.T @ ETA)

    def metric_defect(self):
        m = self.matrix
        return np.max(np.abs(m.T @ ETA @ m - ETA))

    def det(self):
        return float(np.linalg.det(self.matrix))


def boost_to(u):
    """Pure boost into the frame moving with 3-velocity ``u`` (|u| < 1)."""
    u = _vec(u)
    b2 = float(u @ u)
    if b2 >= 1.0:
        raise ConfigError("boost velocity must satisfy |u| < 1")
    m = np.eye(4)
    if b2 == 0.0:
        return LorentzTransform(m)
    gam = 1.0 / np.sqrt(1.0 - b2)
    m[0, 0] = gam
    m[0, 1:] = -gam * u
    m[1:, 0] = -gam * u
    m[1:, 1:] += (gam - 1.0) * np.outer(u, u) / b2
    return LorentzTransform(m)


def rotation_taking(a):
    """Spatial rotation (time row/column untouched) taking (0, a) to (0, 0, 0, |a|).

    Built from a rotation about the 3-axis followed by one about the 2-axis.
    """
    a = _vec(a)
    n = float(np.sqrt(a @ a))
    if n == 0.0:
        raise ConfigError("undefined rotation target: |a| = 0")
    rho = float(np.hypot(a[0], a[1]))
    if rho > 0.0:
        c1, s1 = a[0] / rho, a[1] / rho
    else:
        c1, s1 = 1.0, 0.0
    rz = np.array([[c1, s1, 0.0], [-s1, c1, 0.0], [0.0, 0.0, 1.0]])
    c2, s2 = a[2] / n, rho / n
    ry = np.array([[c2, 0.0, -s2], [0.0, 1.0, 0.0], [s2, 0.0, c2]])
    m = np.eye(4)
    m[1:, 1:] = ry @ rz
    return LorentzTransform(m)
