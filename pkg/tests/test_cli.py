import json

import pytest

from cultivation.circuit import parse_text
from cultivation.cli import config_from_args, main, parse_grid


def test_gen_reparses(tmp_path):
    out = tmp_path / "c.txt"
    assert main(["gen", "--d", "3", "--noise", "uniform", "--p", "1e-3", "--out", str(out)]) == 0
    c = parse_text(out.read_text())
    assert c.is_noisy and c.num_detectors > 0


def test_final_distance_defaults():
    assert config_from_args(["gen", "--d", "4"]).final_d == 9
    assert config_from_args(["sample", "--d", "5"]).final_d == 11
    assert config_from_args(["enumerate", "--d", "4"]).final_d is None
    assert config_from_args(["sample", "--final-d", "none"]).final_d is None


@pytest.mark.parametrize("argv", [
    ["gen", "--d", "6"],
    ["gen", "--d", "3", "--final-d", "2"],
    ["sample", "--p", "1.5"],
    ["sample", "--noise", "biased"],
    ["sweep", "--gap-grid", "5:1:1"],
    ["sweep", "--final-d", "none"],
])
def test_validation_exit_code(argv, capsys):
    assert main(argv) == 2


def test_enumerate_d3_w2(capsys):
    assert main(["enumerate", "--d", "3", "--max-weight", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["sets"] == 0 and rep["raw"] == 0 and rep["complete"]
    assert rep["provenance"]["config_hash"]


def test_sample_noiseless(capsys):
    assert main(["sample", "--d", "3", "--p", "0", "--shots", "2000"]) == 0
    head, row = capsys.readouterr().out.strip().splitlines()
    rec = dict(zip(head.split(","), row.split(",")))
    assert rec["discarded"] == "0" and rec["errors_gap0"] == "0"


def test_sweep_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--d", "3", "--shots", "20000", "--seed", "4", "--gap-grid", "0:60:20"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "1"]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert len(lines) == 2 + 4


def test_parse_grid():
    assert parse_grid("0:2:0.5") == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert parse_grid("3,1,2") == (1.0, 2.0, 3.0)
