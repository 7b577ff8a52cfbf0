"""Field dump format.

Layout (all integers little-endian):

    8 bytes   magic  b"RBESLAB\\x00"
    uint32    format version (1)
    uint32    length H of the header
    H bytes   UTF-8 JSON header: grid descriptors and array shapes
    n_x  x float64 (<f8)   x1 nodes
    n_x * N  x float64 (<f8)   field values, x1 index major, then momentum
              nodes in C order over (radial, polar, azimuthal) indices

Values are written and read as raw IEEE doubles, so a round trip is
bit-exact.
"""
import csv
import json
import struct

import numpy as np

from .quad import make_momentum_quadrature
from .steady import DistField, PhaseGrid

MAGIC = b"RBESLAB\x00"
VERSION = 1


class FieldFormatError(ValueError):
    pass


def _header(field):
    mq = field.grid.mq
    nr, nm, nphi = mq.shape
    return {
        "n_x": int(len(field.grid.x)),
        "n_p": int(len(mq)),
        "pmax": float(mq.pmax),
        "n_radial": int(nr),
        "n_polar": int(nm),
        "n_azimuth": int(nphi),
        "interp_temperature": mq.interp_temperature,
        "order": "x1 major; momentum C-order (radial, polar about p1, azimuth)",
    }


def dump_field(field, path):
    header = json.dumps(_header(field)).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(field.grid.x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise FieldFormatError(f"{path}: not a field dump (bad magic)")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported format version {version}")
    header = json.loads(data[16:16 + hlen].decode())
    off = 16 + hlen
    n_x, n_p = header["n_x"], header["n_p"]
    expected = off + 8 * (n_x + n_x * n_p)
    if len(data) != expected:
        raise FieldFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    x = np.frombuffer(data, dtype="<f8", count=n_x, offset=off).astype(float)
    vals = np.frombuffer(data, dtype="<f8", count=n_x * n_p, offset=off + 8 * n_x).astype(float)
    mq = make_momentum_quadrature(header["pmax"], header["n_radial"], header["n_polar"],
                                  header["n_azimuth"], interp_temperature=header["interp_temperature"])
    if len(mq) != n_p:
        raise FieldFormatError(f"{path}: grid descriptors do not match n_p")
    return DistField(vals.reshape(n_x, n_p), PhaseGrid(x, mq))


def export_csv(field, path):
    mq = field.grid.mq
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "p1", "p2", "p3", "f"])
        for i, x in enumerate(field.grid.x):
            for p, v in zip(mq.nodes, field.values[i]):
                w.writerow([repr(float(x)), repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                            repr(float(v))])
