# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gain-term kernel.  Same contract as ``_kernels_py.qplus``."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, exp, atan2, floor, pow, fmin, fmax, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

# Cell lookup tables have bins narrower than the closest node spacing, so a
# table hit is off by at most one cell and needs a single correction step.
cdef struct Axis:
    const double* nodes
    const double* inv_gap
    Py_ssize_t n
    const long* lut
    Py_ssize_t nbin
    double lo
    double scale


cdef struct Grid:
    Axis rad
    Axis mu
    Py_ssize_t nm
    Py_ssize_t nphi
    double phi0
    double pmax
    bint axisym


def _lookup_table(nodes):
    nodes = np.asarray(nodes, dtype=float)
    gap = np.min(np.diff(nodes))
    nbin = int(np.ceil((nodes[-1] - nodes[0]) / gap)) * 2 + 1
    edges = nodes[0] + (nodes[-1] - nodes[0]) * np.arange(nbin) / nbin
    lut = np.clip(np.searchsorted(nodes, edges, side="right") - 1, 0, len(nodes) - 2)
    return np.ascontiguousarray(lut, dtype=np.int64), nbin / (nodes[-1] - nodes[0])


cdef inline Py_ssize_t _cell(const Axis* ax, double x, double* t) noexcept nogil:
    cdef const double* nodes = ax.nodes
    cdef Py_ssize_t n = ax.n, i, b
    if x <= nodes[0]:
        t[0] = 0.0
        return 0
    if x >= nodes[n - 1]:
        t[0] = 1.0
        return n - 2
    b = <Py_ssize_t>((x - ax.lo) * ax.scale)
    if b >= ax.nbin:
        b = ax.nbin - 1
    i = ax.lut[b]
    while i < n - 2 and nodes[i + 1] <= x:
        i += 1
    t[0] = (x - nodes[i]) * ax.inv_gap[i]
    return i


cdef inline int _stencil(double x, double y, double z, double r, const Grid* gr,
                         Py_ssize_t* idx, double* w) noexcept nogil:
    cdef double mu, tr, tm, tp, u, phi, wa, wb
    cdef Py_ssize_t ir, im, jp, jp1, k, a, b
    cdef Py_ssize_t nm = gr.nm, nphi = gr.nphi
    if r > gr.pmax:
        return 0
    mu = x / r if r > 0.0 else 0.0
    ir = _cell(&gr.rad, r, &tr)
    im = _cell(&gr.mu, mu, &tm)
    if gr.axisym:
        idx[0] = ir * nm + im
        idx[1] = ir * nm + im + 1
        idx[2] = (ir + 1) * nm + im
        idx[3] = (ir + 1) * nm + im + 1
        w[0] = (1.0 - tr) * (1.0 - tm)
        w[1] = (1.0 - tr) * tm
        w[2] = tr * (1.0 - tm)
        w[3] = tr * tm
        return 4
    phi = atan2(z, y)
    u = (phi - gr.phi0) * nphi / (2.0 * M_PI)
    u = u - nphi * floor(u / nphi)
    jp = <Py_ssize_t>floor(u)
    if jp > nphi - 1:
        jp = nphi - 1
    tp = u - jp
    jp1 = (jp + 1) % nphi
    k = 0
    for a in range(2):
        wa = (1.0 - tr) if a == 0 else tr
        for b in range(2):
            wb = (1.0 - tm) if b == 0 else tm
            idx[k] = ((ir + a) * nm + im + b) * nphi + jp
            w[k] = wa * wb * (1.0 - tp)
            idx[k + 1] = ((ir + a) * nm + im + b) * nphi + jp1
            w[k + 1] = wa * wb * tp
            k += 2
    return 8


def qplus(const double[:, ::1] points, const double[:, ::1] rot_cs,
          const double[:, ::1] gf, const double[:, ::1] gh,
          const double[:, ::1] q_nodes, const double[::1] q_weights,
          const double[::1] radii, const double[::1] mus, Py_ssize_t nphi, double phi0,
          double pmax, double inv_temp,
          const double[:, ::1] s_nodes, const double[::1] s_weights, const long[::1] antipode,
          double c_kernel, double gamma, bint axisym, bint symmetric, int threads=1):
    cdef Py_ssize_t M = points.shape[0], ncol = gf.shape[1]
    cdef Py_ssize_t nw_all = s_nodes.shape[0]
    out_arr = np.zeros((M, ncol))
    if M == 0 or ncol == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr

    # omega list (folded onto antipodal pairs when symmetric)
    cdef list sel = []
    cdef Py_ssize_t k
    for k in range(nw_all):
        if (not symmetric) or k < antipode[k]:
            sel.append(k)
    om_arr = np.ascontiguousarray(np.asarray(s_nodes)[sel])
    wa_arr = np.ascontiguousarray(np.asarray(s_weights)[sel])
    if symmetric:
        wa_arr = wa_arr + np.asarray(s_weights)[np.asarray(antipode)[sel]]
    cdef const double[:, ::1] om = om_arr
    cdef const double[::1] wa = wa_arr
    q0_arr = np.sqrt(1.0 + np.einsum("ij,ij->i", np.asarray(q_nodes), np.asarray(q_nodes)))
    cdef const double[::1] q0 = q0_arr

    lut_r, scale_r = _lookup_table(radii)
    lut_m, scale_m = _lookup_table(mus)
    cdef const long[::1] lr = lut_r
    cdef const long[::1] lm = lut_m
    ig_r = 1.0 / np.diff(np.asarray(radii))
    ig_m = 1.0 / np.diff(np.asarray(mus))
    cdef const double[::1] igr = ig_r
    cdef const double[::1] igm = ig_m
    cdef Grid gr
    gr.rad.nodes = &radii[0]
    gr.rad.n = radii.shape[0]
    gr.rad.inv_gap = &igr[0]
    gr.rad.lut = &lr[0]
    gr.rad.nbin = lr.shape[0]
    gr.rad.lo = radii[0]
    gr.rad.scale = scale_r
    gr.mu.nodes = &mus[0]
    gr.mu.n = mus.shape[0]
    gr.mu.inv_gap = &igm[0]
    gr.mu.lut = &lm[0]
    gr.mu.nbin = lm.shape[0]
    gr.mu.lo = mus[0]
    gr.mu.scale = scale_m
    gr.nm = mus.shape[0]
    gr.nphi = nphi
    gr.phi0 = phi0
    gr.pmax = pmax
    gr.axisym = axisym

    cdef int nthreads = threads if threads > 0 else 1
    cdef Py_ssize_t m
    for m in prange(M, nogil=True, schedule="dynamic", num_threads=nthreads):
        _one_output(m, &gr, &points[0, 0], &rot_cs[0, 0], &gf[0, 0], &gh[0, 0], ncol,
                    &q_nodes[0, 0], &q_weights[0], &q0[0], q_nodes.shape[0], inv_temp,
                    &om[0, 0], &wa[0], om.shape[0], c_kernel, gamma, &out[0, 0])
    return out_arr


cdef void _one_output(Py_ssize_t m, const Grid* gr, const double* points, const double* rot_cs,
                      const double* gf, const double* gh, Py_ssize_t ncol,
                      const double* q_nodes, const double* q_weights, const double* q0,
                      Py_ssize_t nq, double inv_temp,
                      const double* om, const double* wa, Py_ssize_t nw,
                      double c_kernel, double gamma, double* out) noexcept nogil:
    # Fixed summation order (q outer, omega inner) regardless of thread count.
    # Per (p, q) the post-collision geometry is computed for all omega in a
    # branch-free pass, then the interpolation gathers run in a second pass.
    cdef Py_ssize_t j, w_i, c, kk
    cdef double px, py, pz, p0, cr, sr, qx, qy, qz, e_q, dx, dy, dz, de, g2, g, sq, vm, base
    cdef double tx, ty, tz, hx, hy, hz, coef, dot, proj, ddx, ddy, ddz, cth, kw, a2, b2, r2
    cdef Py_ssize_t ip[8]
    cdef Py_ssize_t iq[8]
    cdef double wp[8]
    cdef double wq[8]
    cdef int np_, nq_
    cdef double inv4pi = 1.0 / (4.0 * M_PI)
    cdef double pmax = gr.pmax
    cdef double* buf = <double*>malloc((3 * ncol + 12 * nw) * sizeof(double))
    cdef double* acc = buf
    cdef double* fp = buf + ncol
    cdef double* hq = buf + 2 * ncol
    cdef double* ox = buf + 3 * ncol
    cdef double* oy = ox + nw
    cdef double* oz = oy + nw
    cdef double* sig = oz + nw
    cdef double* ppx = sig + nw
    cdef double* ppy = ppx + nw
    cdef double* ppz = ppy + nw
    cdef double* qqx = ppz + nw
    cdef double* qqy = qqx + nw
    cdef double* qqz = qqy + nw
    cdef double* rp = qqz + nw
    cdef double* rq = rp + nw
    cdef const double* row
    for c in range(ncol):
        acc[c] = 0.0
    px = points[3 * m]
    py = points[3 * m + 1]
    pz = points[3 * m + 2]
    p0 = sqrt(1.0 + px * px + py * py + pz * pz)
    cr = rot_cs[2 * m]
    sr = rot_cs[2 * m + 1]
    for w_i in range(nw):
        ox[w_i] = om[3 * w_i]
        oy[w_i] = cr * om[3 * w_i + 1] - sr * om[3 * w_i + 2]
        oz[w_i] = sr * om[3 * w_i + 1] + cr * om[3 * w_i + 2]
        sig[w_i] = 1.0
    for j in range(nq):
        qx = q_nodes[3 * j]
        qy = q_nodes[3 * j + 1]
        qz = q_nodes[3 * j + 2]
        e_q = q0[j]
        dx = px - qx
        dy = py - qy
        dz = pz - qz
        de = p0 - e_q
        g2 = dx * dx + dy * dy + dz * dz - de * de
        if g2 <= 0.0:
            continue
        g = sqrt(g2)
        sq = sqrt(g2 + 4.0)
        vm = g * sq / (2.0 * p0 * e_q)
        base = q_weights[j] * vm * c_kernel * g * exp(-(p0 + e_q) * inv_temp) * inv4pi
        tx = px + qx
        ty = py + qy
        tz = pz + qz
        hx = 0.5 * tx
        hy = 0.5 * ty
        hz = 0.5 * tz
        coef = 1.0 / (sq * (p0 + e_q + sq))
        for w_i in range(nw):
            dot = tx * ox[w_i] + ty * oy[w_i] + tz * oz[w_i]
            proj = dot * coef
            ddx = 0.5 * g * (ox[w_i] + proj * tx)
            ddy = 0.5 * g * (oy[w_i] + proj * ty)
            ddz = 0.5 * g * (oz[w_i] + proj * tz)
            ppx[w_i] = hx + ddx
            ppy[w_i] = hy + ddy
            ppz[w_i] = hz + ddz
            qqx[w_i] = hx - ddx
            qqy[w_i] = hy - ddy
            qqz[w_i] = hz - ddz
            a2 = (hx + ddx) * (hx + ddx) + (hy + ddy) * (hy + ddy) + (hz + ddz) * (hz + ddz)
            b2 = (hx - ddx) * (hx - ddx) + (hy - ddy) * (hy - ddy) + (hz - ddz) * (hz - ddz)
            rp[w_i] = sqrt(a2)
            rq[w_i] = sqrt(b2)
        if gamma != 0.0:
            for w_i in range(nw):
                dot = tx * ox[w_i] + ty * oy[w_i] + tz * oz[w_i]
                cth = (-de * g / sq * dot + 2.0 * (dx * (ppx[w_i] - hx) + dy * (ppy[w_i] - hy)
                                                    + dz * (ppz[w_i] - hz))) / g2
                cth = fmin(1.0, fmax(-1.0, cth))
                sig[w_i] = pow(1.0 - cth * cth, 0.5 * gamma)
        for w_i in range(nw):
            if rp[w_i] > pmax or rq[w_i] > pmax:
                continue
            np_ = _stencil(ppx[w_i], ppy[w_i], ppz[w_i], rp[w_i], gr, ip, wp)
            nq_ = _stencil(qqx[w_i], qqy[w_i], qqz[w_i], rq[w_i], gr, iq, wq)
            kw = base * wa[w_i] * sig[w_i]
            row = gf + ip[0] * ncol
            for c in range(ncol):
                fp[c] = wp[0] * row[c]
            for kk in range(1, np_):
                row = gf + ip[kk] * ncol
                for c in range(ncol):
                    fp[c] += wp[kk] * row[c]
            row = gh + iq[0] * ncol
            for c in range(ncol):
                hq[c] = wq[0] * row[c]
            for kk in range(1, nq_):
                row = gh + iq[kk] * ncol
                for c in range(ncol):
                    hq[c] += wq[kk] * row[c]
            for c in range(ncol):
                acc[c] += kw * fp[c] * hq[c]
    for c in range(ncol):
        out[m * ncol + c] = acc[c]
    free(buf)
