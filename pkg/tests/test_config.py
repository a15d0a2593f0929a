import pytest
import yaml

from ngrayleigh.config import RunConfig, Tolerances
from ngrayleigh.discretization import GridSpec
from ngrayleigh.errors import ValidationError
from ngrayleigh.fibering import Exponents


def test_defaults():
    cfg = RunConfig()
    d = cfg.to_dict()
    assert d["exponents"] == {"q": 1.5, "alpha": 1.75, "gamma": 3.0}
    assert d["grid"] == {"dim": 1, "lengths": [1.0], "n": [256]}
    assert d["tolerances"]["tol_root"] == 1e-12 and d["descent"]["max_iter"] == 10000
    assert cfg.descent_options().tol_opt == 1e-8


def test_yaml_roundtrip(tmp_path):
    cfg = RunConfig(Exponents(1.3, 1.6, 4.0, 2), GridSpec.rectangle(20, 30, 1.0, 2.0),
                    Tolerances(tol_opt=1e-9), initial_step=0.5, max_iter=50, seed=7)
    path = tmp_path / "c.yaml"
    path.write_text(cfg.to_yaml())
    assert RunConfig.load(path) == cfg


def test_partial_document_merges_defaults():
    cfg = RunConfig.from_dict({"grid": {"n": [64]}, "seed": 3})
    assert cfg.grid.n == (64,) and cfg.seed == 3 and cfg.exponents.gamma == 3.0


@pytest.mark.parametrize("doc, match", [
    ({"colour": 1}, "unknown"),
    ({"exponents": {"q": 1.9, "alpha": 1.5}}, "alpha"),
    ({"tolerances": {"tol_root": 0}}, "tol_root"),
    ({"descent": {"max_iter": 0}}, "max_iter"),
    ({"grid": {"dim": 3, "lengths": [1, 1, 1], "n": [8, 8, 8]}}, "dim"),
])
def test_invalid(doc, match):
    with pytest.raises(ValidationError, match=match):
        RunConfig.from_dict(doc)


def test_unparseable(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [unclosed\n")
    with pytest.raises(ValidationError):
        RunConfig.load(bad)
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ValidationError, match="mapping"):
        RunConfig.load(bad)


def test_yaml_is_plain_mapping():
    assert isinstance(yaml.safe_load(RunConfig().to_yaml()), dict)


def test_dim_mismatch():
    with pytest.raises(ValidationError, match="dim"):
        RunConfig(Exponents(1.5, 1.75, 3.0, 2), GridSpec.interval(16))
