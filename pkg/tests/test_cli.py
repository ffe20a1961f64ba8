import json
import subprocess
import sys
from pathlib import Path

import pytest

from quantherm.cli import main

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


def test_validate_ok(capsys):
    assert main(["validate", str(SCEN / "equilibrium.json")]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_print_is_resolved_json(capsys):
    assert main(["validate", str(SCEN / "equilibrium.json"), "--print"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["tolerances"]["trace"] == 1e-10


def test_validate_invalid(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"dims": [2]}))
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "invalid" in err and "hamiltonian" in err


def test_run(tmp_path, capsys):
    assert main(["run", str(SCEN / "equilibrium.json"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "equilibrium: ok" in out
    assert (tmp_path / "equilibrium.csv").exists()


def test_run_invalid(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("[]")
    assert main(["run", str(p), "--out", str(tmp_path)]) == 2


def test_batch_empty_glob(tmp_path, capsys):
    assert main(["batch", str(tmp_path / "*.json")]) == 2
    assert "no scenario files" in capsys.readouterr().err


def test_batch_json(tmp_path, capsys):
    (tmp_path / "a.json").write_text((SCEN / "equilibrium.json").read_text())
    assert main(["batch", str(tmp_path / "*.json"), "--out", str(tmp_path / "o"), "--json"]) == 0
    out = capsys.readouterr().out
    assert "1 ok, 0 failed" in out
    summary = json.loads(out[out.index("{"):])
    assert summary["n_ok"] == 1


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "quantherm", "validate", str(SCEN / "free_evolution.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
