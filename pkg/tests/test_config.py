import json

import pytest

from rbe_slab.config import SCHEMA, defaults_table, parse_config
from rbe_slab.errors import ConfigError


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    rc = parse_config("solve", p)
    v = rc.values
    assert (v["k"], v["pmax"], v["n_x"], v["tol"], v["damping"], v["T_L"], v["T_R"]) == (
        0.1, 12.0, 33, 1e-6, 1.0, 1.0, 1.0)


def test_single_override_changes_only_that_key():
    base = parse_config("solve").values
    new = parse_config("solve", overrides=["k=0.2"]).values
    assert {key for key in SCHEMA if base[key] != new[key]} == {"k"}


@pytest.mark.parametrize("item,key", [("tol=-1", "tol"), ("n_polar=5", "n_polar"), ("bogus=1", "bogus"),
                                      ("n_x=2.5", "n_x"), ("c1=fast", "c1"), ("A_R=-1", "A_R"),
                                      ("backend=fortran", "backend"), ("csv=1", "csv")])
def test_bad_values_name_the_key(item, key):
    with pytest.raises(ConfigError, match=key) as exc:
        parse_config("solve", overrides=[item])
    assert exc.value.key == key


def test_config_file_and_override_precedence(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"k": 0.3, "n_x": 17, "A_R": "balanced"}))
    rc = parse_config("solve", p, ["n_x=9"])
    assert rc.values["k"] == 0.3 and rc.values["n_x"] == 9 and rc.values["A_R"] == "balanced"
    assert rc.solver_config().n_x == 9


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config("solve", tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{k: 1")
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("solve", bad)
    with pytest.raises(ConfigError, match="mode"):
        parse_config("plot")
    with pytest.raises(ConfigError, match="threads"):
        parse_config("solve", threads=0)


def test_defaults_are_not_shared():
    a = parse_config("solve")
    a.values["k_list"].append(9.0)
    assert parse_config("solve").values["k_list"] == [0.05, 0.1, 0.2]


def test_defaults_table_covers_schema():
    assert [row[0] for row in defaults_table()] == list(SCHEMA)
