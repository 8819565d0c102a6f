import json
import math

import pytest

from quadcost.config import DEFAULTS, load_config, resolve_config
from quadcost.model import ConfigError
from quadcost.output import fmt_float, write_csv, write_json


def test_defaults_echo():
    rc = resolve_config(None)
    assert rc.config_dict() == {k: (float(v) if k in ("s0", "w0", "T", "dt") else v) for k, v in DEFAULTS.items()}
    assert rc.echo()["config"]["rho"] == 0.05


def test_missing_key_named(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"mu": 0.05, "gamma": 0.01, "rho": 0.05, "eps": 0.01}))
    with pytest.raises(ConfigError, match="sigma"):
        load_config(f)


def test_unknown_and_typed_keys():
    base = {"mu": 0.05, "sigma": 0.15, "gamma": 0.01, "rho": 0.05, "eps": 0.01}
    with pytest.raises(ConfigError, match="unknown"):
        resolve_config(dict(base, colour=1))
    with pytest.raises(ConfigError, match="seed"):
        resolve_config(dict(base, seed=1.5))
    with pytest.raises(ValueError, match="eps must be positive"):
        resolve_config(dict(base, eps=0.0))


def test_bad_json(tmp_path):
    f = tmp_path / "c.json"
    f.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(f)


def test_config_round_trip(tmp_path):
    rc = resolve_config(None, seed=9)
    f = tmp_path / "echo.json"
    write_json(f, rc.config_dict())
    assert load_config(f).config_dict() == rc.config_dict()


@pytest.mark.parametrize("x", [0.1, 1 / 3, 2.220446049250313e-16, 1e300, -7.0, 123456789.123456789])
def test_float_round_trip(x):
    assert float(fmt_float(x)) == x


def test_csv_and_json(tmp_path):
    write_csv(tmp_path / "a.csv", ["a", "b", "c"], [(1, 0.1, True), (2, math.nan, False)])
    assert (tmp_path / "a.csv").read_text() == "a,b,c\n1,0.10000000000000001,1\n2,nan,0\n"
    write_json(tmp_path / "a.json", {"b": math.inf, "a": [1.5]})
    assert json.loads((tmp_path / "a.json").read_text()) == {"a": [1.5], "b": None}
    assert not list(tmp_path.glob(".*tmp"))
