import numpy as np
import pytest

from affine_entropy import config
from affine_entropy.errors import ParseError, ValidationError

RN1 = """
seed = 3

[algebra]
catalog = "rn:1"

[drift]
D = [[1.0]]

[controls]
dirs = [[1.0]]
range_lo = [-1.0]
range_hi = [1.0]

[pair]
K_lo = [-0.5]
K_hi = [0.5]
Q_lo = [-0.5]
Q_hi = [0.5]
delta = 0.01
"""


def test_minimal_config_gets_defaults():
    cfg = config.parse_config_text(RN1)
    assert cfg.seed == 3
    assert cfg.z.tolist() == [0.0]
    assert cfg.controls["family"] == "feedback"
    assert cfg.controls["cap"] == 5000
    assert cfg.pair_spec["eps"] == [0.2, 0.1]
    assert cfg.pair_spec["tau"] == [2.0, 3.0, 4.0, 5.0, 6.0]
    assert cfg.numerics == config.NUMERICS_DEFAULTS | {"volume_tau": [0.5, 1.0, 2.0]}
    assert cfg.system.D_star.tolist() == [[1.0]]


def test_non_derivation_is_rejected():
    text = RN1.replace("catalog = \"rn:1\"", "catalog = \"heis3\"").replace(
        "D = [[1.0]]", "D = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]")
    with pytest.raises(ValidationError) as info:
        config.parse_config_text(text)
    assert any("Leibniz residual" in p for p in info.value.problems)


def test_zero_on_boundary_of_range():
    with pytest.raises(ValidationError, match="0 not interior to Ω"):
        config.parse_config_text(RN1.replace("range_lo = [-1.0]", "range_lo = [0.0]"))


def test_problems_are_aggregated():
    text = (RN1.replace("range_lo = [-1.0]", "range_lo = [0.0]")
            .replace("D = [[1.0]]", "D = [[1.0, 2.0]]")
            .replace("seed = 3", "seed = -1\nbogus = 1"))
    with pytest.raises(ValidationError) as info:
        config.parse_config_text(text)
    msgs = " | ".join(info.value.problems)
    for part in ("seed", "bogus", "drift.D", "0 not interior"):
        assert part in msgs
    assert len(info.value.problems) >= 4


def test_broken_algebra_reports_every_axiom():
    text = RN1.replace('catalog = "rn:1"', """dim = 2
structure = [[1, 2, 2, 1.0], [2, 1, 2, 1.0]]
rep_basis = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]""")
    with pytest.raises(ValidationError) as info:
        config.parse_config_text(text)
    probs = info.value.problems
    assert any("antisymmetry" in p for p in probs)
    assert not any("drift.z" in p for p in probs)


def test_tau_must_sit_on_the_sample_grid():
    with pytest.raises(ValidationError, match="sample spacing"):
        config.parse_config_text(RN1 + "eps = [0.1]\ntau = [2.0, 2.0005]\n")


def test_syntax_error():
    with pytest.raises(ParseError):
        config.parse_config_text("[algebra\ncatalog = 1")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        config.parse_config(tmp_path / "nope.toml")


@pytest.mark.parametrize("name", sorted(config.SYSTEMS))
def test_dump_round_trip(name, tmp_path):
    cfg = config.system_config(name)
    path = tmp_path / "cfg.toml"
    path.write_text(config.dump_config(cfg))
    back = config.parse_config(path)
    assert back == cfg
    assert np.array_equal(back.system.D_star, cfg.system.D_star)


def test_catalog_shortcut_and_overrides():
    cfg = config.parse_config("system:rn2-saddle")
    assert cfg.name == "rn2-saddle"
    other = config.system_config("rn2-saddle", seed=9, numerics={"instances": 10})
    assert other.seed == 9 and other.numerics["instances"] == 10
    assert other.numerics["step"] == 0.005
    with pytest.raises(ValidationError, match="unknown catalog system"):
        config.parse_config("system:nope")


def test_quotient_coordinates_need_quotient_dimension():
    with pytest.raises(ValidationError, match="quotient dimension 1"):
        config.system_config("heis3-split", pair={"coords": "quotient"})
    cfg = config.system_config("heis3-split", pair={
        "coords": "quotient", "K_lo": [-0.5], "K_hi": [0.5], "Q_lo": [-0.5], "Q_hi": [0.5], "delta": 0.01})
    assert cfg.uses_quotient and cfg.chart.k == 1
