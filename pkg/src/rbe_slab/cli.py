"""``rbe-slab`` command line entry point.

    rbe-slab <mode> [--config PATH] [--set key=value ...] [--out DIR]
             [--threads N] [--seed S]

Exit codes: 0 ok, 2 configuration error, 3 non-convergence, 4 oracle or
verification failure.  The thread count defaults to ``RBE_SLAB_THREADS``
(then the CPU count); ``--threads`` wins.
"""
import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import collision, fieldio, kernels, norms, oracles, steady
from .config import MODES, parse_config
from .errors import ConfigError, ConvergenceError, StateCorruptionError

SCHEMA_VERSION = "rbe-slab-report/1"
EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_ORACLE = 0, 2, 3, 4
SUP_LABEL = "discrete sup (lower bound)"

log = logging.getLogger("rbe_slab")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, data):
    text = json.dumps(_clean(data), indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text)


class Timer:
    def __init__(self):
        self.phases = {}

    def __call__(self, name):
        timer = self

        class _Phase:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                timer.phases[name] = timer.phases.get(name, 0.0) + time.perf_counter() - self.t

        return _Phase()


def boundary_from_config(rc, mq):
    v = rc.values
    a_r = v["A_R"]
    if a_r == "balanced":
        a_r = steady.balanced_amplitude(v["A_L"], v["T_L"], v["T_R"], mq)
    return steady.BoundaryProfile.juttner(v["T_L"], v["T_R"], v["A_L"], float(a_r))


def _trace_dict(trace):
    return {
        "converged": trace.converged,
        "iterations": trace.iterations,
        "c1": trace.c1,
        "fixed_point_residual": trace.fixed_point_residual,
        "lower_bound_held": trace.lower_bound_held,
        "upper_bound_held": trace.upper_bound_held,
        "envelope_margin": trace.envelope_margin,
        "rows": trace.rows,
    }


def field_diagnostics(field, op, k, k_list, hyp_normals, n_lattice):
    """NormReport, coercivity constants and moment residuals of a field."""
    mq = field.grid.mq
    out = {"sup_label": SUP_LABEL}
    rep = norms.norm_report(field.values, op, k, k_list=k_list, n_normals=hyp_normals,
                            n_lattice=n_lattice)
    out["norms"] = rep.as_dict()
    if np.any(field.values):
        cl, cu = collision.coercivity_scan(field.values, mq, op.kernel, op=op)
        out["coercivity"] = {"C_l_hat": cl, "C_u_hat": cu}
    else:
        out["coercivity"] = None
    res = collision.moment_residuals(field.values.T, mq, op.squad, op.kernel, op=op)
    out["moment_residuals_max_abs"] = np.max(np.abs(res), axis=1)
    return out


def _header(rc):
    return {"schema_version": SCHEMA_VERSION, "mode": rc.mode, "config": rc.echo()}


def run_solve(rc, timer):
    cfg = rc.solver_config()
    out = Path(rc.out_dir)
    with timer("setup"):
        grid = steady.make_grid(cfg)
        op = steady.make_operator(cfg, grid.mq)
        bp = boundary_from_config(rc, grid.mq)
    report = _header(rc)
    report["boundary"] = {"params": bp.params,
                          "compatibility": steady.compatibility_check(bp, grid.mq)}
    status = EXIT_OK
    with timer("solve"):
        try:
            field, trace = steady.solve(cfg, bp, grid=grid, op=op)
            report["status"] = "converged"
        except ConvergenceError as exc:
            field, trace = exc.field, exc.trace
            report["status"] = f"non-convergence: {exc}"
            status = EXIT_NONCONVERGENCE
        except StateCorruptionError as exc:
            field, trace = None, exc.trace
            report["status"] = f"state corruption at iteration {exc.iteration}"
            status = EXIT_NONCONVERGENCE
    report["trace"] = _trace_dict(trace)
    if field is not None:
        with timer("dump"):
            fieldio.dump_field(field, out / "field.bin")
            if rc.values["csv"]:
                fieldio.export_csv(field, out / "field.csv")
        if status == EXIT_OK:
            report["envelope_violation"] = steady.envelope_violation(field, bp, trace.c1)
            with timer("diagnostics"):
                report.update(field_diagnostics(field, op, cfg.k, rc.values["k_list"],
                                                rc.values["hyp_normals"], rc.values["n_lattice"]))
    return report, status


def run_check_boundary(rc, timer):
    cfg = rc.solver_config()
    grid = steady.make_grid(cfg)
    op = steady.make_operator(cfg, grid.mq)
    bp = boundary_from_config(rc, grid.mq)
    fl, fr = bp.samples(grid.mq)
    with timer("boundary"):
        lb = steady.boundary_collision_frequencies(bp, grid, op)
        compat = steady.compatibility_check(bp, grid.mq)
        pair = np.stack([fl, fr])
        inv = norms.norm_inv(pair, grid.mq, cfg.k, rc.values["n_lattice"])[0]
        main = norms.norm_main(pair, grid.mq, cfg.k)
    flux_scale = float(np.dot(grid.mq.weights, (np.abs(fl) + np.abs(fr)) * np.abs(grid.mq.nodes[:, 0])))
    checks = {
        "nonnegative": bool(np.all(fl >= 0) and np.all(fr >= 0)),
        "min_L_f_L": float(lb[:, 0].min()),
        "min_L_f_R": float(lb[:, 1].min()),
        "collision_floor_positive": bool(lb[:, 0].min() > 0 and lb[:, 1].min() > 0),
        "norm_main_f_LR": main,
        "norm_inv_f_LR": inv,
        "norms_finite": bool(np.isfinite(main) and np.isfinite(inv)),
    }
    tol = 1e-10 * max(flux_scale, 1e-300)
    report = _header(rc)
    report["boundary"] = {"params": bp.params, "compatibility": compat,
                          "compatibility_tolerance": tol,
                          "compatible": bool(np.all(np.abs(compat) <= tol)),
                          "hypotheses": checks}
    ok = checks["nonnegative"] and checks["collision_floor_positive"] and checks["norms_finite"]
    report["status"] = "ok" if ok else "boundary hypotheses violated"
    return report, (EXIT_OK if ok else EXIT_ORACLE)


def run_norms(rc, timer):
    cfg = rc.solver_config()
    path = rc.values["field"] or str(Path(rc.out_dir) / "field.bin")
    if not Path(path).is_file():
        raise ConfigError(f"field dump {path} not found", key="field")
    field = fieldio.load_field(path)
    op = steady.make_operator(cfg, field.grid.mq)
    report = _header(rc)
    report["field"] = path
    with timer("diagnostics"):
        report.update(field_diagnostics(field, op, cfg.k, rc.values["k_list"],
                                        rc.values["hyp_normals"], rc.values["n_lattice"]))
    report["status"] = "ok"
    return report, EXIT_OK


def run_oracle(rc, timer):
    with timer("oracles"):
        rows = oracles.oracle_table()
        p = np.array([1.0, 0.0, 0.0])
        cfg = rc.solver_config()
        grid = steady.make_grid(cfg)
        op = steady.make_operator(cfg, grid.mq)
        j = np.exp(-grid.mq.energies)
        m, se = oracles.mc_loss_juttner(p, kernel=op.kernel, pmax=cfg.pmax, n_samples=10**6, seed=rc.seed)
        val = collision.eval_L(j, p, grid.mq, op.kernel)
        rows.append({"name": "L Juttner p=(1,0,0) vs MC", "value": val, "reference": m,
                     "error": abs(val - m), "tol": 3 * se, "pass": bool(abs(val - m) <= 3 * se)})
        m, se = oracles.mc_gain_juttner(p, kernel=op.kernel, pmax=cfg.pmax, n_samples=10**6,
                                        seed=rc.seed + 1)
        val = float(op.gain_at(p, j)[0])
        rows.append({"name": "Q+ Juttner p=(1,0,0) vs MC", "value": val, "reference": m,
                     "error": abs(val - m), "tol": 3 * se, "pass": bool(abs(val - m) <= 3 * se)})
    report = _header(rc)
    report["oracles"] = rows
    ok = all(r["pass"] for r in rows)
    report["status"] = "ok" if ok else "oracle failure"
    return report, (EXIT_OK if ok else EXIT_ORACLE)


def run_bench(rc, timer):
    from .bench import bench_table

    report = _header(rc)
    with timer("bench"):
        report["bench"] = bench_table(rc.values["bench_sizes"], rc.values["bench_nx"],
                                      pmax=rc.values["pmax"], threads=rc.threads)
    report["status"] = "ok"
    return report, EXIT_OK


RUNNERS = {
    "solve": run_solve,
    "check-boundary": run_check_boundary,
    "norms": run_norms,
    "oracle": run_oracle,
    "bench": run_bench,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="rbe-slab", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one config key (value parsed as JSON when possible)")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    return ap


def _default_threads():
    env = os.environ.get("RBE_SLAB_THREADS")
    if env is None:
        return kernels.default_threads()
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"RBE_SLAB_THREADS={env!r} is not an integer", key="threads") from None


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        threads = args.threads if args.threads is not None else _default_threads()
        rc = parse_config(args.mode, args.config, args.overrides, out_dir=args.out,
                          threads=threads, seed=args.seed)
        Path(rc.out_dir).mkdir(parents=True, exist_ok=True)
        timer = Timer()
        report, status = RUNNERS[rc.mode](rc, timer)
    except ConfigError as exc:
        print(f"rbe-slab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report["backend"] = kernels.DEFAULT_BACKEND if rc.values["backend"] == "auto" else rc.values["backend"]
    write_json(Path(rc.out_dir) / "report.json", report)
    write_json(Path(rc.out_dir) / "timings.json", {"mode": rc.mode, "seconds": timer.phases})
    print(f"rbe-slab {rc.mode}: {report.get('status')} -> {Path(rc.out_dir) / 'report.json'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
