import pytest

from grwlab import config as cfgmod
from grwlab.errors import ConfigurationError

BASE = """\
[fiber]
type = torus        # flat fiber
resolution = 16,16

[warp]
type = exponential
params = 1.0, 1.0

[solver]
tol = 1e-10

[init]
kind = random-bump
amplitude = 0.3
seed = 4
base = 0.5
"""


def test_parse_defaults_and_values(monkeypatch):
    monkeypatch.delenv(cfgmod.SEED_ENV, raising=False)
    cfg = cfgmod.parse_text(BASE)
    assert cfg.fiber["resolution"] == (16, 16)
    assert cfg.warp["params"] == (1.0, 1.0)
    assert cfg.solver.tol == 1e-10 and cfg.solver.seed == 4
    assert cfg.output["formats"] == ("json", "csv", "png")
    mesh = cfg.build_mesh()
    assert mesh.n_vertices == 256
    assert cfg.build_warp().kind == "exponential"


def test_unknown_key_names_line():
    with pytest.raises(ConfigurationError, match=r"solver\.toll \(line 10\)"):
        cfgmod.parse_text(BASE.replace("tol = 1e-10", "toll = 1e-10"))


def test_unknown_section():
    with pytest.raises(ConfigurationError, match="unknown section"):
        cfgmod.parse_text(BASE + "\n[plots]\nx = 1\n")


def test_unknown_fiber_names_key_and_line():
    with pytest.raises(ConfigurationError, match=r"fiber\.type.*klein.*line 2"):
        cfgmod.parse_text(BASE.replace("type = torus", "type = klein"))


@pytest.mark.parametrize("old,new", [("tol = 1e-10", "tol = abc"), ("seed = 4", "seed = 1.5"),
                                     ("amplitude = 0.3", "amplitude = nan"),
                                     ("tol = 1e-10", "tol = -1")])
def test_bad_values(old, new):
    with pytest.raises(ConfigurationError):
        cfgmod.parse_text(BASE.replace(old, new))


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv(cfgmod.SEED_ENV, "11")
    assert cfgmod.parse_text(BASE).solver.seed == 11
    monkeypatch.setenv(cfgmod.SEED_ENV, "eleven")
    with pytest.raises(ConfigurationError):
        cfgmod.parse_text(BASE)


def test_with_value_numeric_only(monkeypatch):
    monkeypatch.delenv(cfgmod.SEED_ENV, raising=False)
    cfg = cfgmod.parse_text(BASE)
    assert cfg.with_value("init.amplitude", "0.1").init["amplitude"] == 0.1
    assert cfg.init["amplitude"] == 0.3
    with pytest.raises(ConfigurationError):
        cfg.with_value("fiber.type", "sphere")
    with pytest.raises(ConfigurationError):
        cfg.with_value("init.nothing", "1")
    with pytest.raises(ConfigurationError):
        cfg.with_value("amplitude", "1")


def test_bad_suite():
    with pytest.raises(ConfigurationError, match="suite"):
        cfgmod.parse_text(BASE + "\n[verify]\nsuite = everything\n")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        cfgmod.load(tmp_path / "absent.ini")


def test_to_dict_is_serializable(monkeypatch):
    import json
    monkeypatch.delenv(cfgmod.SEED_ENV, raising=False)
    json.dumps(cfgmod.parse_text(BASE).to_dict())


@pytest.mark.parametrize("name", ["de_sitter.ini", "torus_exp.ini"])
def test_shipped_configs_parse(name, monkeypatch):
    from pathlib import Path
    monkeypatch.delenv(cfgmod.SEED_ENV, raising=False)
    cfg = cfgmod.load(Path(__file__).resolve().parents[1] / "configs" / name)
    assert cfg.build_mesh().n_vertices > 0
