"""Weighted mixed norms of slab fields, the Riesz-potential and hyperplane
norms, and the gain-term ratio diagnostics.

Fields are arrays of shape (n_x, N) over a momentum grid ``mq``; a 1-D array
is treated as a single x1 slice.  The weight is phi(p) = exp(k p0) and every
integrand carries the extra factor sqrt(p0).

Sups over centers ``a`` and plane normals are taken over finite candidate
sets, so the reported values are lower bounds for the true sups.
"""
from dataclasses import asdict, dataclass

import numpy as np

from . import relkin
from .collision import CollisionOperator
from .errors import RatioUndefinedError

HYP_NORMALS = 64
PLANE_RADIAL = 32
PLANE_ANGULAR = 64


def _field(values):
    return np.atleast_2d(np.asarray(values, dtype=float))


def _sup_x(values):
    return np.max(np.abs(_field(values)), axis=0)


def _density(values, mq, k):
    """sqrt(p0) phi(p) max_x |f| at every grid node."""
    return np.sqrt(mq.energies) * np.exp(k * mq.energies) * _sup_x(values)


def norm_LinfL1(values, mq):
    # same reduction as norm_L1Linf, so x-independent fields give equal values
    w = mq.weights * np.sqrt(mq.energies)
    return float(max(np.dot(w, row) for row in np.abs(_field(values))))


def norm_L1Linf(values, mq):
    return float(np.dot(mq.weights * np.sqrt(mq.energies), _sup_x(values)))


def norm_main(values, mq, k):
    """||f|| = integral of max_x |f| sqrt(p0) exp(k p0) dp."""
    return float(np.dot(mq.weights, _density(values, mq, k)))


# --- Riesz potential -------------------------------------------------------

def _potential(density, mq, centers):
    """sum_p w_p density_p / |p - a| with the near-field cell average 3/(2h)."""
    centers = np.atleast_2d(centers)
    h = mq.local_h()
    wd = mq.weights * density
    keep = wd != 0.0
    nodes, wd, h = mq.nodes[keep], wd[keep], h[keep]
    out = np.empty(len(centers))
    for i in range(0, len(centers), 128):
        a = centers[i:i + 128]
        d = np.linalg.norm(nodes[None, :, :] - a[:, None, :], axis=-1)
        inv = np.where(d < h[None, :], 1.5 / h[None, :], 1.0 / np.maximum(d, 1e-300))
        out[i:i + 128] = inv @ wd
    return out


def candidate_centers(mq, n_lattice=5):
    lat = np.linspace(-mq.pmax, mq.pmax, n_lattice)
    cube = np.stack(np.meshgrid(lat, lat, lat, indexing="ij"), axis=-1).reshape(-1, 3)
    return np.concatenate([mq.nodes, np.zeros((1, 3)), cube])


def _sup_potential(density, mq, n_lattice=5, refine_steps=12):
    """Discrete sup over centers: candidate scan, then a compass pattern search."""
    cands = candidate_centers(mq, n_lattice)
    vals = _potential(density, mq, cands)
    i = int(np.argmax(vals))
    best_a, best = cands[i].copy(), float(vals[i])
    step = float(np.median(mq.local_h()))
    dirs = np.concatenate([np.eye(3), -np.eye(3)])
    for _ in range(refine_steps):
        trial = np.clip(best_a + step * dirs, -mq.pmax, mq.pmax)
        tv = _potential(density, mq, trial)
        j = int(np.argmax(tv))
        if tv[j] > best:
            best_a, best = trial[j], float(tv[j])
        else:
            step *= 0.5
    return best, best_a


def norm_inv(values, mq, k, n_lattice=5):
    """(||f||_{-1}, argmax a); the sup runs over a in [-pmax, pmax]^3."""
    dens = _density(values, mq, k)
    if not np.any(dens):
        return 0.0, np.zeros(3)
    return _sup_potential(dens, mq, n_lattice)


# --- hyperplanes -----------------------------------------------------------

def fibonacci_half_sphere(n):
    """n unit normals spread over the upper half sphere (n3 >= 0)."""
    i = np.arange(n) + 0.5
    z = 1.0 - i / n
    r = np.sqrt(1.0 - z * z)
    ang = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)


def plane_rule(pmax, n_radial=PLANE_RADIAL, n_angular=PLANE_ANGULAR):
    """Polar Gauss rule on the disc |p| <= pmax in the plane p3 = 0."""
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * pmax * (x + 1.0)
    wr = 0.5 * pmax * wx * r
    th = 2.0 * np.pi * np.arange(n_angular) / n_angular
    pts = np.stack([np.outer(r, np.cos(th)), np.outer(r, np.sin(th)), np.zeros((n_radial, n_angular))],
                   axis=-1).reshape(-1, 3)
    w = np.outer(wr, np.full(n_angular, 2.0 * np.pi / n_angular)).ravel()
    return pts, w


def plane_integral(table, mq, normal, k, rule=None):
    """Integral of sqrt(p0) phi(p) table(p) over the plane through 0 with this normal.

    ``table`` holds nonnegative grid values; they are interpolated onto the
    plane nodes, which come from rotating the reference disc back with the
    inverse of :func:`relkin.rotation_taking`.
    """
    pts, w = rule if rule is not None else plane_rule(mq.pmax)
    rot = relkin.rotation_taking(normal).matrix[1:, 1:]
    p = pts @ rot  # rows of rot.T applied to each point
    e = relkin.energy(p)
    vals = mq.interpolate(table, p)
    return float(np.dot(w, np.sqrt(e) * np.exp(k * e) * vals))


def _sup_planes(table, mq, k, n_normals=HYP_NORMALS, refine_steps=8):
    rule = plane_rule(mq.pmax)
    normals = np.concatenate([fibonacci_half_sphere(n_normals), np.eye(3)])
    vals = np.array([plane_integral(table, mq, n, k, rule) for n in normals])
    i = int(np.argmax(vals))
    best_n, best = normals[i], float(vals[i])
    step = np.sqrt(4.0 * np.pi / (2 * n_normals))
    for _ in range(refine_steps):
        t1 = np.cross(best_n, [1.0, 0.0, 0.0] if abs(best_n[0]) < 0.9 else [0.0, 1.0, 0.0])
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(best_n, t1)
        trial = [best_n + step * s * t for t in (t1, t2) for s in (1.0, -1.0)]
        trial = [n / np.linalg.norm(n) for n in trial]
        tv = [plane_integral(table, mq, n, k, rule) for n in trial]
        j = int(np.argmax(tv))
        if tv[j] > best:
            best_n, best = trial[j], float(tv[j])
        else:
            step *= 0.5
    if best_n[2] < 0:
        best_n = -best_n
    return best, best_n


def norm_hyp(values, mq, k, n_normals=HYP_NORMALS):
    """(||f||_hyp, argmax normal) over Fibonacci normals plus local refinement."""
    if n_normals < 3:
        raise ValueError("n_normals must be >= 3")
    sup = _sup_x(values)
    if not np.any(sup):
        return 0.0, np.array([0.0, 0.0, 1.0])
    return _sup_planes(sup, mq, k, n_normals)


# --- gain ratios -----------------------------------------------------------

def _gain_sup(values, op):
    """max_x Q+(f, f)(x, p) on the grid."""
    q = op.gain(_field(values).T)
    return np.max(q, axis=1)


def _require_nonzero(values):
    if not np.any(values):
        raise RatioUndefinedError("ratio undefined: field is identically zero")


def gain_ratio_inv(values, op, k, n_lattice=5, qsup=None):
    """R1 = sup_a int phi(p)/|p-a| max_x Q+(f,f) dp / ||f||^2."""
    _require_nonzero(values)
    mq = op.mq
    qsup = _gain_sup(values, op) if qsup is None else qsup
    num, _ = _sup_potential(np.exp(k * mq.energies) * qsup, mq, n_lattice)
    return num / norm_main(values, mq, k) ** 2


def gain_ratio_pointwise(values, op, k_list, qsup=None):
    """R2(k) = k int phi max_x Q+(f,f) dp / (||f||_{-1} ||f||) for each k."""
    _require_nonzero(values)
    mq = op.mq
    qsup = _gain_sup(values, op) if qsup is None else qsup
    out = []
    for k in k_list:
        num = k * float(np.dot(mq.weights, np.exp(k * mq.energies) * qsup))
        den = norm_inv(values, mq, k)[0] * norm_main(values, mq, k)
        out.append(num / den)
    return out


def gain_ratio_hyp(values, op, k, n_normals=HYP_NORMALS, qsup=None):
    """R_hyp = sup_E int_E sqrt(p0) phi max_x Q+(f,f) dsigma / ||f||^2."""
    _require_nonzero(values)
    qsup = _gain_sup(values, op) if qsup is None else qsup
    num, _ = _sup_planes(qsup, op.mq, k, n_normals)
    return num / norm_main(values, op.mq, k) ** 2


@dataclass
class NormReport:
    norm_LinfL1: float
    norm_L1Linf: float
    norm_main: float
    norm_inv: float
    norm_inv_argmax: list
    norm_hyp: float
    norm_hyp_argmax: list
    R1: float
    R2: list
    R2_k: list
    R_hyp: float

    def as_dict(self):
        return asdict(self)


def norm_report(values, op, k, k_list=(0.05, 0.1, 0.2), n_normals=HYP_NORMALS, n_lattice=5):
    """All norms and gain ratios of a field; the ratios are None for a zero field."""
    mq = op.mq
    inv, a = norm_inv(values, mq, k, n_lattice)
    hyp, n = norm_hyp(values, mq, k, n_normals)
    if np.any(values):
        qsup = _gain_sup(values, op)
        r1 = float(gain_ratio_inv(values, op, k, n_lattice, qsup=qsup))
        r2 = gain_ratio_pointwise(values, op, k_list, qsup=qsup)
        rh = gain_ratio_hyp(values, op, k, n_normals, qsup=qsup)
    else:
        r1, r2, rh = None, [None] * len(k_list), None
    return NormReport(
        norm_LinfL1=norm_LinfL1(values, mq), norm_L1Linf=norm_L1Linf(values, mq),
        norm_main=norm_main(values, mq, k), norm_inv=inv, norm_inv_argmax=[float(x) for x in a],
        norm_hyp=hyp, norm_hyp_argmax=[float(x) for x in n],
        R1=r1, R2=[None if x is None else float(x) for x in r2], R2_k=[float(x) for x in k_list],
        R_hyp=None if rh is None else float(rh),
    )
