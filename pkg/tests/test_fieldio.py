import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbe_slab import fieldio, steady


def make_field(seed, n_x=5):
    cfg = steady.SolverConfig(n_x=n_x, pmax=6.0, n_radial=4, n_polar=2, n_azimuth=4)
    grid = steady.make_grid(cfg)
    rng = np.random.default_rng(seed)
    vals = rng.random(grid.shape) * 10.0 ** rng.integers(-300, 300)
    return steady.DistField(vals, grid)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_is_bit_exact(tmp_path_factory, seed):
    f = make_field(seed)
    path = tmp_path_factory.mktemp("dump") / "f.bin"
    fieldio.dump_field(f, path)
    g = fieldio.load_field(path)
    assert g.values.tobytes() == f.values.tobytes()
    assert g.grid.x.tobytes() == f.grid.x.tobytes()
    assert g.grid.mq.nodes.tobytes() == f.grid.mq.nodes.tobytes()


def test_special_values_survive(tmp_path):
    f = make_field(1)
    f.values[0, :3] = [0.0, 5e-324, 1.7976931348623157e308]
    fieldio.dump_field(f, tmp_path / "f.bin")
    np.testing.assert_array_equal(fieldio.load_field(tmp_path / "f.bin").values, f.values)


def test_bad_files(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"not a field dump at all")
    with pytest.raises(fieldio.FieldFormatError, match="magic"):
        fieldio.load_field(p)
    f = make_field(2)
    fieldio.dump_field(f, tmp_path / "f.bin")
    data = (tmp_path / "f.bin").read_bytes()
    (tmp_path / "short.bin").write_bytes(data[:-8])
    with pytest.raises(fieldio.FieldFormatError, match="bytes"):
        fieldio.load_field(tmp_path / "short.bin")


def test_csv_export(tmp_path):
    f = make_field(3, n_x=2)
    fieldio.export_csv(f, tmp_path / "f.csv")
    with open(tmp_path / "f.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "p1", "p2", "p3", "f"]
    assert len(rows) == 1 + f.values.size
    assert float(rows[1 + len(f.grid.mq)][4]) == f.values[1, 0]
