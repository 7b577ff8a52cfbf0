"""Independent reference values: seeded Monte Carlo estimates of L and Q+ on
Juttner data, and the closed-form / adaptive-quadrature oracle table used by
``rbe-slab oracle``."""
import numpy as np
from scipy.integrate import quad as adaptive_quad

from . import quad, relkin
from .collision import Kernel

_CHUNK = 500_000


def _sample_q(rng, n, temperature):
    """|q| ~ Gamma(3, T) with uniform direction; returns (q, 1/density)."""
    r = rng.gamma(3.0, temperature, size=n)
    u = rng.normal(size=(n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    inv_density = 4.0 * np.pi * 2.0 * temperature**3 * np.exp(r / temperature)
    return r[:, None] * u, r, inv_density


def _mean_se(total, total_sq, n):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return mean, np.sqrt(var / n)


def mc_loss_juttner(p, temperature=1.0, amplitude=1.0, kernel=None, pmax=np.inf,
                    n_samples=10**7, seed=0):
    """MC estimate (mean, standard error) of Lf(p) for f = A exp(-q0/T), |q| <= pmax."""
    kernel = kernel or Kernel()
    rng = np.random.default_rng(seed)
    p = np.asarray(p, dtype=float)
    s1 = s2 = 0.0
    done = 0
    while done < n_samples:
        n = min(_CHUNK, n_samples - done)
        q, r, inv_d = _sample_q(rng, n, temperature)
        s, g = relkin.invariants(p[None, :], q)
        vm = relkin.moller_velocity(p[None, :], q)
        val = (kernel.c0 * kernel.c_kernel * vm * g * amplitude
               * np.exp(-relkin.energy(q) / temperature) * inv_d)
        val = np.where(r <= pmax, val, 0.0)
        s1 += val.sum()
        s2 += (val * val).sum()
        done += n
    return _mean_se(s1, s2, n_samples)


def mc_gain_juttner(p, temperature=1.0, amplitude=1.0, kernel=None, pmax=np.inf,
                    n_samples=10**7, seed=0, n_strata=16):
    """MC estimate (mean, standard error) of Q+(f, f)(p) for Juttner f.

    q is importance sampled as in :func:`mc_loss_juttner`; omega is stratified
    in cos(theta) over ``n_strata`` equal bands and uniform in azimuth.
    Post-collision momenta beyond ``pmax`` contribute zero, matching the
    truncated grid operator.
    """
    kernel = kernel or Kernel()
    rng = np.random.default_rng(seed)
    p = np.asarray(p, dtype=float)
    s1 = np.zeros(n_strata)
    s2 = np.zeros(n_strata)
    cnt = np.zeros(n_strata)
    done = 0
    while done < n_samples:
        n = min(_CHUNK, n_samples - done)
        q, r, inv_d = _sample_q(rng, n, temperature)
        band = (np.arange(done, done + n) % n_strata)
        mu = -1.0 + 2.0 * (band + rng.random(n)) / n_strata
        ph = 2.0 * np.pi * rng.random(n)
        st = np.sqrt(1.0 - mu * mu)
        om = np.stack([st * np.cos(ph), st * np.sin(ph), mu], axis=1)
        pp = p[None, :] + 0.0 * q
        s, g = relkin.invariants(pp, q)
        ok = (g > 0) & (r <= pmax)
        pq, qq = relkin.post_collision(pp, q, om)
        ok &= (np.linalg.norm(pq, axis=1) <= pmax) & (np.linalg.norm(qq, axis=1) <= pmax)
        sig = np.zeros(n)
        if np.any(ok):
            sig[ok] = kernel.sigma0(relkin.scattering_cos(pp[ok], q[ok], om[ok]))
        vm = relkin.moller_velocity(pp, q)
        fpq = amplitude * np.exp(-relkin.energy(pq) / temperature)
        fqq = amplitude * np.exp(-relkin.energy(qq) / temperature)
        val = np.where(ok, 4.0 * np.pi * kernel.c_kernel * vm * g * sig * fpq * fqq * inv_d, 0.0)
        s1 += np.bincount(band, val, n_strata)
        s2 += np.bincount(band, val * val, n_strata)
        cnt += np.bincount(band, minlength=n_strata)
        done += n
    # each band carries probability 1/n_strata
    means = s1 / cnt
    variances = np.maximum(s2 / cnt - means**2, 0.0)
    return float(means.mean()), float(np.sqrt(np.sum(variances / cnt)) / n_strata)


def _row(name, value, reference, tol, relative=False):
    err = abs(value - reference)
    if relative:
        err = err / abs(reference)
    return {"name": name, "value": float(value), "reference": float(reference),
            "error": float(err), "tol": float(tol), "pass": bool(err <= tol)}


def oracle_table():
    """Closed-form and adaptive-quadrature checks of relkin and quad."""
    rows = []
    rows.append(_row("energy(0,3,4)", relkin.energy([0.0, 3.0, 4.0]), np.sqrt(26.0), 1e-15))
    s, g = relkin.invariants([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
    rows.append(_row("s head-on unit", s, 8.0, 1e-12))
    rows.append(_row("g head-on unit", g, 2.0, 1e-12))
    rows.append(_row("moller head-on unit", relkin.moller_velocity([1.0, 0, 0], [-1.0, 0, 0]),
                     np.sqrt(2.0), 1e-12))
    pp, qq = relkin.post_collision([1.0, 0, 0], [-1.0, 0, 0], [0, 0, 1.0])
    rows.append(_row("post_collision p+q=0", np.max(np.abs(pp - [0, 0, 1.0])), 0.0, 1e-12))
    rows.append(_row("scattering_cos head-on", relkin.scattering_cos([1.0, 0, 0], [-1.0, 0, 0], [0, 0, 1.0]),
                     0.0, 1e-12))
    lam = relkin.rotation_taking([3.0, 4.0, 0.0])
    rows.append(_row("rotation_taking (3,4,0)", np.max(np.abs(lam([0, 3.0, 4.0, 0]) - [0, 0, 0, 5.0])),
                     0.0, 1e-12))

    s24 = quad.make_sphere_quadrature(2, 4)
    rows.append(_row("sphere (2,4) total", s24.weights.sum(), 4 * np.pi, 1e-12))
    s16 = quad.make_sphere_quadrature(16, 32)
    rows.append(_row("sphere (16,32) w3^2", s16.integrate(s16.nodes[:, 2] ** 2), 4 * np.pi / 3, 1e-12))
    v = np.array([0.3, -0.4, 0.5]) / np.linalg.norm([0.3, -0.4, 0.5])
    for x in (0.5, 1.0, 2.0, 5.0):
        num = s16.integrate(np.exp(x * s16.nodes @ v))
        rows.append(_row(f"sphere_exp c|v|={x}", num, quad.sphere_exp(x, v), 1e-8, relative=True))
    s64 = quad.make_sphere_quadrature(64, 128)
    d = np.array([1.0, 2.0, 2.0]) / 3.0
    for a in (0.0, 0.5, 2.0, 10.0):
        num = s64.integrate(1.0 / np.linalg.norm(s64.nodes - a * d, axis=1))
        rows.append(_row(f"sphere_inv_distance |a|={a}", num, quad.sphere_inv_distance(a * d), 1e-6,
                         relative=True))
    m1 = quad.make_momentum_quadrature(1.0, 8, 2, 4)
    rows.append(_row("ball volume pmax=1", m1.weights.sum(), 4 * np.pi / 3, 1e-10, relative=True))
    m30 = quad.make_momentum_quadrature(30.0, 32, 2, 4)
    rows.append(_row("int exp(-|p|) pmax=30", m30.integrate(np.exp(-m30.node_radius)), 8 * np.pi, 1e-8,
                     relative=True))
    m12 = quad.make_momentum_quadrature(12.0, 32, 2, 4)
    ref = 4 * np.pi * adaptive_quad(lambda r: r * r * (1 + r * r) ** 0.25 * np.exp(-2 * np.sqrt(1 + r * r)),
                                    0.0, 12.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    rows.append(_row("int sqrt(p0) exp(-2 p0)", m12.integrate(np.sqrt(m12.energies) * np.exp(-2 * m12.energies)),
                     ref, 1e-8, relative=True))
    return rows
