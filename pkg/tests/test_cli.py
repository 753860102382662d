import csv

import pytest

from kirchfrac.cli import EXIT_CONFIG, EXIT_OK, RunConfig, main, read_config_file
from kirchfrac.exceptions import ParameterDomainError


def test_verify_passes(capsys):
    assert main(["verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and out.count("[PASS]") >= 10


@pytest.mark.parametrize("argv", [
    ["solve", "--r", "0.5", "--mesh-kind", "graded"],
    ["solve", "--alpha", "1.5"],
    ["solve", "--M", "2"],
    ["table", "--id", "4", "--alpha", "1.2"],
])
def test_bad_configuration_exit_code(argv, tmp_path, monkeypatch):
    monkeypatch.setenv("KIRCHFRAC_OUTPUT_DIR", str(tmp_path))
    assert main(argv) == EXIT_CONFIG


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        main(["table", "--id", "7"])
    assert info.value.code == 2


def test_solve_writes_levels(tmp_path, monkeypatch):
    monkeypatch.setenv("KIRCHFRAC_OUTPUT_DIR", str(tmp_path))
    field = tmp_path / "field.txt"
    code = main(["solve", "--alpha", "0.5", "--N", "6", "--M", "5", "--r", "4",
                 "--mesh-kind", "graded", "--field", str(field)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "levels.csv")))
    assert len(rows) == 6 and rows[-1]["n"] == "6"
    assert float(rows[-1]["t"]) == 1.0
    assert all(float(r["kirchhoff"]) >= 1.0 for r in rows)
    assert len(field.read_text().splitlines()) == 1 + 25


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KIRCHFRAC_OUTPUT_DIR", str(tmp_path))
    assert main(["solve", "--T", "10", "--N", "1", "--M", "3"]) == 1
    assert "level 1" in capsys.readouterr().err


def test_config_file(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nalpha = 0.6\nN = 4  # steps\nmesh-kind = two_part\nr = 3.3\nsigma = none\n")
    values = read_config_file(cfg)
    assert values == {"alpha": 0.6, "N": 4, "mesh_kind": "two_part", "r": 3.3, "sigma": None}
    RunConfig(**values).validate()
    monkeypatch.setenv("KIRCHFRAC_OUTPUT_DIR", str(tmp_path))
    assert main(["solve", "--config", str(cfg), "--M", "5"]) == EXIT_OK
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(ParameterDomainError):
        read_config_file(bad)
    assert main(["solve", "--config", str(bad)]) == EXIT_CONFIG


def test_table_check_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["table", "--id", "4", "--alpha", "0.6", "--check", "--output-dir", str(out1)]) == EXIT_OK
    assert main(["table", "--id", "4", "--alpha", "0.6", "--output-dir", str(out2)]) == EXIT_OK
    first = (out1 / "table4_alpha0.6.csv").read_text()
    assert first == (out2 / "table4_alpha0.6.csv").read_text()
    assert first.splitlines()[0].startswith("M,N,alpha,r,mesh_kind")
    assert (out1 / "table4_alpha0.6.txt").exists()
