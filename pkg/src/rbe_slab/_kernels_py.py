"""Pure numpy implementation of the gain-term kernel.

Mirrors ``_ckernels.pyx`` operation for operation; used when the compiled
extension is unavailable or ``RBE_SLAB_PURE=1`` is set.
"""
import numpy as np

_Q_CHUNK = 256


def _cell(nodes, x):
    n = len(nodes)
    i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, n - 2)
    t = (np.clip(x, nodes[0], nodes[-1]) - nodes[i]) / (nodes[i + 1] - nodes[i])
    return i, t


def _stencil(pts, radii, mus, nphi, phi0, pmax, axisym):
    r = np.sqrt(np.einsum("...i,...i->...", pts, pts))
    safe = np.where(r > 0.0, r, 1.0)
    mu = np.where(r > 0.0, pts[..., 0] / safe, 0.0)
    ir, tr = _cell(radii, r)
    im, tm = _cell(mus, mu)
    nm = len(mus)
    inside = (r <= pmax).astype(float)
    idx, wts = [], []
    if axisym:
        for a, wa in ((ir, 1.0 - tr), (ir + 1, tr)):
            for b, wb in ((im, 1.0 - tm), (im + 1, tm)):
                idx.append(a * nm + b)
                wts.append(wa * wb * inside)
    else:
        phi = np.arctan2(pts[..., 2], pts[..., 1])
        u = np.mod((phi - phi0) * nphi / (2.0 * np.pi), nphi)
        jp = np.minimum(np.floor(u).astype(np.int64), nphi - 1)
        tp = u - jp
        jp1 = (jp + 1) % nphi
        for a, wa in ((ir, 1.0 - tr), (ir + 1, tr)):
            for b, wb in ((im, 1.0 - tm), (im + 1, tm)):
                for c, wc in ((jp, 1.0 - tp), (jp1, tp)):
                    idx.append((a * nm + b) * nphi + c)
                    wts.append(wa * wb * wc * inside)
    return np.stack(idx, axis=-1), np.stack(wts, axis=-1)


def qplus(points, rot_cs, gf, gh, q_nodes, q_weights, radii, mus, nphi, phi0, pmax,
          inv_temp, s_nodes, s_weights, antipode, c_kernel, gamma, axisym, symmetric,
          threads=1):
    """Gain term at ``points`` for tables of interpolation-weighted values.

    ``gf``/``gh`` hold f*exp(p0/T) per grid row (rings when ``axisym``), one
    column per x1 node.  ``rot_cs[m]`` = (cos a, sin a) rotates the sphere rule
    about e1 for output m.  With ``symmetric`` the rule is folded onto
    antipodal pairs, which is exact when gf is gh.
    """
    points = np.asarray(points, dtype=float)
    M = len(points)
    ncol = gf.shape[1]
    out = np.zeros((M, ncol))
    q0 = np.sqrt(1.0 + np.einsum("ij,ij->i", q_nodes, q_nodes))
    if symmetric:
        half = np.nonzero(np.arange(len(s_weights)) < antipode)[0]
        sw_a = s_weights[half]
        sw_b = s_weights[antipode[half]]
        omega_all = s_nodes[half]
    else:
        sw_a = s_weights
        omega_all = s_nodes
    for m in range(M):
        p = points[m]
        p0 = np.sqrt(1.0 + p @ p)
        c, s = rot_cs[m]
        om = np.empty_like(omega_all)
        om[:, 0] = omega_all[:, 0]
        om[:, 1] = c * omega_all[:, 1] - s * omega_all[:, 2]
        om[:, 2] = s * omega_all[:, 1] + c * omega_all[:, 2]
        acc = np.zeros(ncol)
        for j0 in range(0, len(q_nodes), _Q_CHUNK):
            q = q_nodes[j0:j0 + _Q_CHUNK]
            e_q = q0[j0:j0 + _Q_CHUNK]
            d = p - q
            de = p0 - e_q
            g2 = np.maximum(np.einsum("ij,ij->i", d, d) - de * de, 0.0)
            g = np.sqrt(g2)
            sq = np.sqrt(g2 + 4.0)
            vm = g * sq / (2.0 * p0 * e_q)
            base = q_weights[j0:j0 + _Q_CHUNK] * vm * c_kernel * g * np.exp(-(p0 + e_q) * inv_temp)
            tot = p + q
            etot = p0 + e_q
            coef = 1.0 / (sq * (etot + sq))
            proj = (tot @ om.T) * coef[:, None]  # (nq, nw)
            dd = 0.5 * g[:, None, None] * (om[None, :, :] + proj[..., None] * tot[:, None, :])
            pp = 0.5 * tot[:, None, :] + dd
            qq = 0.5 * tot[:, None, :] - dd
            if gamma != 0.0:
                # (p-q)^mu (p'-q')_mu / g^2 with p'0 - q'0 = (g/sqrt s) omega.tot
                tdiff = g[:, None] / sq[:, None] * (tot @ om.T)
                num = -de[:, None] * tdiff + 2.0 * np.einsum("ij,iwj->iw", d, dd)
                with np.errstate(divide="ignore", invalid="ignore"):
                    cth = np.clip(np.where(g2[:, None] > 0, num / g2[:, None], 1.0), -1.0, 1.0)
                sig = (1.0 - cth * cth) ** (0.5 * gamma) / (4.0 * np.pi)
            else:
                sig = np.full(proj.shape, 1.0 / (4.0 * np.pi))
            if symmetric:
                kw = base[:, None] * (sw_a[None, :] * sig + sw_b[None, :] * sig)
            else:
                kw = base[:, None] * sw_a[None, :] * sig
            ip, wp = _stencil(pp, radii, mus, nphi, phi0, pmax, axisym)
            iq, wq = _stencil(qq, radii, mus, nphi, phi0, pmax, axisym)
            fp = np.einsum("iwkc,iwk->iwc", gf[ip], wp)
            hq = np.einsum("iwkc,iwk->iwc", gh[iq], wq)
            acc += np.einsum("iw,iwc->c", kw, fp * hq)
        out[m] = acc
    return out
