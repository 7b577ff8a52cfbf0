"""Backend selection for the gain-term kernel.

The compiled extension is used when it imports and ``RBE_SLAB_PURE`` is not
set; otherwise the numpy implementation runs.  Both share one signature.
"""
import logging
import os

import numpy as np

from . import _kernels_py

log = logging.getLogger(__name__)

_compiled = None
if os.environ.get("RBE_SLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        log.info("compiled kernels unavailable; using numpy fallback")

BACKENDS = {"python": _kernels_py.qplus}
if _compiled is not None:
    BACKENDS["cython"] = _compiled.qplus

DEFAULT_BACKEND = "cython" if "cython" in BACKENDS else "python"


def default_threads():
    try:
        return max(1, int(os.environ.get("RBE_SLAB_THREADS", "0")) or os.cpu_count() or 1)
    except ValueError:
        return os.cpu_count() or 1


def qplus_table(points, table_f, table_h, mq, squad, c_kernel, gamma, axisym,
                symmetric=None, backend=None, threads=None):
    """Gain term Q+(f, h) at ``points`` from grid tables (rows x columns).

    Tables hold raw values f; the interpolation weight is applied here.  Rows
    are grid nodes, or (radius, polar) rings when ``axisym``.  The sphere rule
    is rotated about e1 by each output point's azimuth.
    """
    backend = backend or DEFAULT_BACKEND
    fn = BACKENDS[backend]
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    table_f = np.asarray(table_f, dtype=float)
    table_h = np.asarray(table_h, dtype=float)
    if symmetric is None:
        symmetric = table_f is table_h or (table_f.shape == table_h.shape and np.array_equal(table_f, table_h))
    symmetric = bool(symmetric) and bool(np.all(squad.antipode >= 0))
    if axisym:
        e_rows = np.sqrt(1.0 + mq.radii**2).repeat(len(mq.mus))
    else:
        e_rows = mq.energies
    wrow = mq.interp_weight(e_rows)[:, None]
    gf = np.ascontiguousarray(table_f * wrow)
    gh = gf if symmetric else np.ascontiguousarray(table_h * wrow)
    ang = np.arctan2(points[:, 2], points[:, 1]) - mq.phis[0]
    rot_cs = np.ascontiguousarray(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    return fn(points, rot_cs, gf, gh,
              np.ascontiguousarray(mq.nodes), np.ascontiguousarray(mq.weights),
              np.ascontiguousarray(mq.radii), np.ascontiguousarray(mq.mus),
              len(mq.phis), float(mq.phis[0]), float(mq.pmax), float(mq.inv_temperature),
              np.ascontiguousarray(squad.nodes), np.ascontiguousarray(squad.weights),
              np.ascontiguousarray(squad.antipode, dtype=np.int64),
              float(c_kernel), float(gamma), bool(axisym), bool(symmetric),
              threads=int(threads or default_threads()))
