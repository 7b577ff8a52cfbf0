"""Timing of the compiled gain kernel against the numpy fallback."""
import time

import numpy as np

from . import kernels
from .collision import CollisionOperator, Kernel
from .quad import make_momentum_quadrature, make_sphere_quadrature


def _best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_case(size, n_x, pmax=12.0, threads=None, repeat=1):
    """Time one Q+(f, f) evaluation on ``n_x`` ring-reduced Juttner columns.

    ``size`` is [n_radial, n_polar, n_azimuth, sphere_polar, sphere_azimuth].
    Returns a dict with seconds per backend, the speedup and the largest
    relative difference between backends.
    """
    nr, nm, nphi, sp, sa = (int(v) for v in size)
    mq = make_momentum_quadrature(pmax, nr, nm, nphi)
    sq = make_sphere_quadrature(sp, sa)
    ring_e = np.sqrt(1.0 + mq.radii**2).repeat(len(mq.mus))
    scale = np.linspace(0.5, 1.5, n_x)
    table = np.exp(-ring_e)[:, None] * scale[None, :]
    row = {"size": [nr, nm, nphi, sp, sa], "n_x": int(n_x)}
    results = {}
    for name in sorted(kernels.BACKENDS):
        op = CollisionOperator(mq, sq, Kernel(), backend=name, threads=threads)
        secs, out = _best_of(lambda: op.gain(table, rings=True), repeat)
        row[f"seconds_{name}"] = secs
        results[name] = out
    if len(results) == 2:
        a, b = results["cython"], results["python"]
        row["speedup"] = row["seconds_python"] / row["seconds_cython"]
        row["max_rel_diff"] = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    return row


def bench_table(sizes, n_x, pmax=12.0, threads=None, repeat=1):
    return [bench_case(s, n_x, pmax, threads, repeat) for s in sizes]
