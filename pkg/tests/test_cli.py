"""CLI surface: subcommand wiring, exit codes, file outputs."""

import json

import numpy as np
import pytest

from sobtrace.cli import main
from sobtrace.grid import GridField


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_no_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_whitney_stdout(capsys):
    code, out = run_cli(capsys, "whitney", "--canonical", "two-points", "--h", "1/32")
    assert code == 0
    obj = json.loads(out)
    assert obj["report"]["pass"]
    assert obj["pass_count"] == obj["cube_count"] == len(obj["cubes"])


def test_whitney_needs_a_set(capsys):
    code, _ = run_cli(capsys, "whitney")
    assert code == 2


def test_extend_writes_grid(tmp_path, capsys):
    code, _ = run_cli(
        capsys,
        "--out", str(tmp_path),
        "extend", "--canonical", "two-points", "--h", "1/32", "--family", "linear",
    )
    assert code == 0
    F = GridField.load(tmp_path / "extension")
    meta = json.loads((tmp_path / "extend.json").read_text())
    assert list(F.values.shape) == meta["grid_shape"]
    assert meta["total"] > 0


def test_functional_averaged_modulus(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"functional": "averaged-modulus", "t": 0.25, "p": 3.0}))
    code, out = run_cli(
        capsys,
        "functional", "--canonical", "segment-1d-in-2d", "--h", "1/32",
        "--family", "linear", "--config", str(cfg),
    )
    assert code == 0
    obj = json.loads(out)
    assert obj["functional"] == "averaged-modulus"
    assert obj["result"]["value"] > 0


def test_functional_unknown_kind(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"functional": "no-such"}))
    code, _ = run_cli(
        capsys,
        "functional", "--canonical", "two-points", "--h", "1/32",
        "--family", "linear", "--config", str(cfg),
    )
    assert code == 2


def test_tracenorm_files(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theorem": "T11", "p": 3.0}))
    out_dir = tmp_path / "out"
    code, _ = run_cli(
        capsys,
        "--out", str(out_dir),
        "tracenorm", "--canonical", "two-points", "--h", "1/32",
        "--family", "linear", "--config", str(cfg),
    )
    assert code == 0
    obj = json.loads((out_dir / "tracenorm.json").read_text())
    assert obj["value"] > 0
    rows = (out_dir / "tracenorm.csv").read_text().strip().splitlines()
    assert rows[0] == "term,value"
    total = float(rows[-1].split(",", 1)[1])
    assert np.isclose(total, obj["value"], rtol=1e-12)


def test_tracenorm_bad_theorem(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theorem": "T99", "p": 3.0}))
    code, _ = run_cli(
        capsys,
        "tracenorm", "--canonical", "two-points", "--h", "1/32",
        "--family", "linear", "--config", str(cfg),
    )
    assert code == 2


def test_tracenorm_overflow_exits_3(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theorem": "T11", "p": 3.0}))
    fn = tmp_path / "fn.json"
    fn.write_text(json.dumps({"values": [1e300, -1e300]}))
    code, _ = run_cli(
        capsys,
        "tracenorm", "--canonical", "two-points", "--h", "1/32",
        "--function", str(fn), "--config", str(cfg),
    )
    assert code == 3


def test_verify_report_file(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, _ = run_cli(
        capsys,
        "--out", str(out_dir),
        "verify", "--theorem", "T11", "--canonical", "two-points",
        "--family", "linear", "--h-levels", "1/32,1/64",
    )
    assert code == 0
    obj = json.loads((out_dir / "report.json").read_text())
    assert obj["report_version"] == 1
    assert "runtime" not in obj
    assert obj["h_levels"] == [1 / 32, 1 / 64]


def test_verify_needs_theorem(capsys):
    code, _ = run_cli(capsys, "verify", "--canonical", "two-points")
    assert code == 2


def test_demo_quick_profile(tmp_path, capsys):
    code, out = run_cli(
        capsys, "--out", str(tmp_path), "demo", "--profile", "quick"
    )
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "whitney_contract.json" in names
    assert "verify_t11.json" in names
    assert "verify_t723_besov.json" in names
