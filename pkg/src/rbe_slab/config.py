"""Run configuration: defaults, JSON config files and ``--set`` overrides.

Every tolerance and resolution used by a run is a key here.  Unknown keys,
wrong types and constraint violations raise :class:`ConfigError` naming the
key.
"""
import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .steady import SolverConfig

MODES = ("solve", "check-boundary", "norms", "oracle", "bench")


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _count(lo):
    return lambda v: v >= lo


def _bench_sizes(v):
    def ok(s):
        return (len(s) == 5 and all(type(i) is int and i >= 2 for i in s)
                and s[1] % 2 == 0 and s[4] >= 4)
    return len(v) > 0 and all(ok(s) for s in v)


# key: (default, accepted types, constraint or None, description)
SCHEMA = {
    "k": (0.1, (float,), _pos, "exponential weight rate in phi(p) = exp(k p0)"),
    "c1": ("auto", (float, str), None, "envelope rate; 'auto' = max L(f_L + f_R)"),
    "damping": (1.0, (float,), lambda v: 0 < v <= 1, "Picard damping lambda"),
    "tol": (1e-6, (float,), _pos, "relative increment tolerance in ||.||"),
    "max_iter": (200, (int,), _count(1), "iteration cap"),
    "n_x": (33, (int,), _count(2), "x1 nodes on [0, 1]"),
    "pmax": (12.0, (float,), _pos, "momentum truncation radius"),
    "n_radial": (16, (int,), _count(2), "radial Gauss nodes"),
    "n_polar": (8, (int,), lambda v: v >= 2 and v % 2 == 0, "polar Gauss nodes about p1 (even)"),
    "n_azimuth": (16, (int,), _count(2), "azimuthal nodes"),
    "sphere_polar": (12, (int,), _count(2), "sphere rule polar nodes"),
    "sphere_azimuth": (24, (int,), _count(4), "sphere rule azimuthal nodes"),
    "c_kernel": (1.0, (float,), _nonneg, "kernel prefactor"),
    "gamma_ang": (0.0, (float,), _nonneg, "angular exponent in sin^gamma"),
    "interp_temperature": (1.0, (float, type(None)), lambda v: v is None or v > 0,
                           "interpolation weight temperature; null = plain trilinear"),
    "T_L": (1.0, (float,), _pos, "left wall temperature"),
    "T_R": (1.0, (float,), _pos, "right wall temperature"),
    "A_L": (1.0, (float,), _nonneg, "left wall amplitude"),
    "A_R": (1.0, (float, str), None, "right wall amplitude or 'balanced'"),
    "k_list": ([0.05, 0.1, 0.2], (list,), lambda v: len(v) > 0 and all(x > 0 for x in v),
               "weight rates for the pointwise gain ratio"),
    "hyp_normals": (64, (int,), _count(3), "Fibonacci plane normals"),
    "n_lattice": (5, (int,), _count(2), "lattice points per axis for Riesz-potential centers"),
    "field": ("", (str,), None, "field dump to analyse in norms mode"),
    "backend": ("auto", (str,), lambda v: v in ("auto", "cython", "python"), "Q+ kernel backend"),
    "bench_sizes": ([[8, 4, 8, 6, 12], [16, 8, 16, 12, 24]], (list,), _bench_sizes,
                    "bench grids: [n_radial, n_polar, n_azimuth, sphere_polar, sphere_azimuth]"),
    "bench_nx": (33, (int,), _count(1), "x1 columns per bench evaluation"),
    "csv": (False, (bool,), None, "also write field.csv"),
}


@dataclass(frozen=True)
class RunConfig:
    mode: str
    values: dict
    out_dir: str = "."
    threads: int = 1
    seed: int = 0

    def solver_config(self):
        v = self.values
        return SolverConfig(
            k=v["k"], c1=v["c1"], damping=v["damping"], tol=v["tol"], max_iter=v["max_iter"],
            n_x=v["n_x"], pmax=v["pmax"], n_radial=v["n_radial"], n_polar=v["n_polar"],
            n_azimuth=v["n_azimuth"], sphere_polar=v["sphere_polar"],
            sphere_azimuth=v["sphere_azimuth"], c_kernel=v["c_kernel"], gamma_ang=v["gamma_ang"],
            interp_temperature=v["interp_temperature"],
            backend=None if v["backend"] == "auto" else v["backend"], threads=self.threads,
        )

    def echo(self):
        return {"mode": self.mode, "threads": self.threads, "seed": self.seed,
                **{key: self.values[key] for key in SCHEMA}}


def _coerce(key, value):
    default, types, check, _ = SCHEMA[key]
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{key}: expected {types[0].__name__}, got bool", key=key)
    if float in types and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if int in types and isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, types):
        names = "/".join("null" if t is type(None) else t.__name__ for t in types)
        raise ConfigError(f"{key}: expected {names}, got {type(value).__name__}", key=key)
    if key == "c1" and isinstance(value, str) and value != "auto":
        raise ConfigError("c1: expected a positive number or 'auto'", key=key)
    if key == "c1" and isinstance(value, float) and not value > 0:
        raise ConfigError("c1 must be positive", key=key)
    if key == "A_R" and isinstance(value, str) and value != "balanced":
        raise ConfigError("A_R: expected a number >= 0 or 'balanced'", key=key)
    if key == "A_R" and isinstance(value, float) and value < 0:
        raise ConfigError("A_R must be >= 0", key=key)
    try:
        ok = check is None or check(value)
    except TypeError:
        ok = False
    if not ok:
        raise ConfigError(f"{key}: value {value!r} violates its constraint ({SCHEMA[key][3]})", key=key)
    return value


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def parse_config(mode, path=None, overrides=(), out_dir=".", threads=1, seed=0):
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}", key="mode")
    values = {key: copy.deepcopy(spec[0]) for key, spec in SCHEMA.items()}
    given = {}
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} does not exist", key="config")
        text = p.read_text()
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}", key="config") from None
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object", key="config")
            given.update(data)
    for item in overrides:
        key, value = _parse_override(item)
        given[key] = value
    for key, value in given.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)
        values[key] = _coerce(key, value)
    if int(threads) != threads or threads < 1:
        raise ConfigError("threads must be a positive integer", key="threads")
    if int(seed) != seed:
        raise ConfigError("seed must be an integer", key="seed")
    return RunConfig(mode=mode, values=values, out_dir=str(out_dir), threads=int(threads), seed=int(seed))


def defaults_table():
    return [(key, spec[0], spec[3]) for key, spec in SCHEMA.items()]

