import csv
import json

import pytest

from affine_entropy import cli, config

SMALL_RN1 = {"pair": {"delta": 0.02, "eps": [0.2], "tau": [1.0, 1.5, 2.0, 2.5]}, "controls": {"cap": 400}}


def _write(tmp_path, cfg, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(config.dump_config(cfg))
    return str(p)


def test_spectrum_heis3(capsys):
    assert cli.main(["spectrum", "system:heis3-demo"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# affine-entropy spectrum: system heis3-demo")
    rows = [line.split() for line in out.splitlines()[2:5]]
    assert sorted(float(r[1]) for r in rows) == [1.0, 2.0, 3.0]
    assert "sum of positive real parts: 6.0" in out


def test_formula_rn2(capsys):
    assert cli.main(["entropy-formula", "system:rn2-saddle"]) == 0
    out = capsys.readouterr().out
    assert "closed-form entropy: 1.0" in out
    assert "topological entropy bound: 1.0" in out


BROKEN = """
[algebra]
dim = 2
structure = [[1, 2, 2, 1.0], [2, 1, 2, 1.0]]
rep_basis = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]

[drift]
D = [[0.0, 0.0], [0.0, 0.0]]

[controls]
dirs = [[0.0, 1.0]]
range_lo = [-1.0]
range_hi = [1.0]

[pair]
K_lo = [-0.5, -0.5]
K_hi = [0.5, 0.5]
Q_lo = [-0.5, -0.5]
Q_hi = [0.5, 0.5]
delta = 0.25
"""


def test_validate_broken_antisymmetry(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text(BROKEN)
    assert cli.main(["validate", str(p)]) == 1
    assert "antisymmetry residual" in capsys.readouterr().err


def test_validate_catalog_system(capsys):
    assert cli.main(["validate", "system:aff2-affine"]) == 0


def test_dump_config_round_trip(tmp_path, capsys):
    assert cli.main(["spectrum", "system:heis3-split", "--dump-config", "--seed", "11"]) == 0
    text = capsys.readouterr().out
    back = config.parse_config_text(text)
    assert back.seed == 11
    assert back == config.system_config("heis3-split", seed=11)


def test_estimate_csv_is_reproducible(tmp_path, capsys):
    path = _write(tmp_path, config.system_config("rn1-scalar", **SMALL_RN1))
    outs = []
    for k in range(2):
        csv_path = tmp_path / f"r{k}.csv"
        assert cli.main(["entropy-estimate", path, "--csv", str(csv_path)]) == 0
        outs.append(csv_path.read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.reader(outs[0].decode().splitlines()))
    assert rows[0] == ["tau", "eps", "r", "ln_r_over_tau"]
    assert len(rows) == 5
    r = [int(row[2]) for row in rows[1:]]
    assert r == sorted(r) and r[0] >= 1


def test_estimate_uncoverable_exits_nonzero(tmp_path, capsys):
    cfg = config.system_config("rn1-scalar", pair=SMALL_RN1["pair"],
                               controls={"family": "lattice", "levels": 2, "cap": 1})
    assert cli.main(["entropy-estimate", _write(tmp_path, cfg)]) == 1
    assert "uncovered" in capsys.readouterr().err


def test_json_and_trace(tmp_path, capsys):
    js, tr = tmp_path / "out.json", tmp_path / "trace.csv"
    assert cli.main(["quotient-check", "system:heis3-split", "--json", str(js), "--trace", str(tr)]) == 0
    rec = json.loads(js.read_text())
    assert rec["command"] == "quotient-check" and rec["dims"] == [1, 2]
    rows = list(csv.reader(tr.read_text().splitlines()))
    assert rows[0][0] == "t" and len(rows[0]) == 4
    assert float(rows[1][0]) == 0.0


def test_verify_all_passes(capsys):
    assert cli.main(["verify-all", "system:rn1-scalar"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out


def test_bad_seed_and_bad_command(capsys):
    assert cli.main(["spectrum", "system:rn1-scalar", "--seed", "-2"]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate", "system:rn1-scalar"])
    assert info.value.code == 2


def test_invalid_config_exit(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text('system = "rn1-scalar"\n[controls]\nrange_lo = [0.0]\n')
    assert cli.main(["validate", str(p)]) == 1
    assert "0 not interior" in capsys.readouterr().err
