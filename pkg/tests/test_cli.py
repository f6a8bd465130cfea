import csv
import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mechharmonic.cli import (EXIT_CONFIG, EXIT_FAILED, EXIT_OK, load_config, main,
                              reference_path_file)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
REFERENCE_SHA256 = "25f4f672b8d35c4d1d3395aee7a37375f7c92de852c8e1cd7bd0c66c3918603b"


def write(path, obj):
    path.write_text(json.dumps(obj, indent=2))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def small_synthesis(tmp_path, **extra):
    cfg = json.loads((CONFIGS / "synthesis.json").read_text())
    cfg["ga"] = {"population": 10, "generations": 4}
    cfg.update(extra)
    return write(tmp_path / "synth.json", cfg)


def test_reference_path_checksum():
    data = reference_path_file().read_bytes()
    assert hashlib.sha256(data).hexdigest() == REFERENCE_SHA256


def test_analysis_run(tmp_path):
    assert main(["run", str(CONFIGS / "analysis.json"), "--out", str(tmp_path)]) == EXIT_OK
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["status"] == "ok"
    assert result["parameters"]["p"] == 16.0
    assert result["parameters"]["servo_pivot"] == [27.0, -2.0]
    assert result["torque"]["hybrid"] is True
    path = read_csv(tmp_path / "path.csv")
    assert len(path) == 24 and max(float(r["error"]) for r in path) < 1e-8
    theta5 = read_csv(tmp_path / "theta5.csv")
    assert float(theta5[0]["theta5"]) == pytest.approx(np.pi / 2)
    spectrum = read_csv(tmp_path / "spectrum.csv")
    assert [int(r["order"]) for r in spectrum] == [1, 2, 3, 4, 5]
    # the reference path rocks the servo 10 degrees either side of vertical
    assert float(spectrum[0]["magnitude"]) == pytest.approx(np.radians(10), rel=1e-6)
    assert len(read_csv(tmp_path / "torque.csv")) == 24


def test_infeasible_analysis_reports_partial_results(tmp_path):
    cfg = json.loads((CONFIGS / "analysis.json").read_text())
    cfg["geometry"].update(r=4, s=4)
    assert main(["run", str(write(tmp_path / "c.json", cfg)), "--out", str(tmp_path)]) \
        == EXIT_FAILED
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["status"] == "infeasible"
    assert (tmp_path / "path.csv").exists()


def test_synthesis_is_byte_identical_and_seed_override(tmp_path):
    cfg = small_synthesis(tmp_path)
    outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
    codes = [main(["run", str(cfg), "--out", str(outs[0])]),
             main(["run", str(cfg), "--out", str(outs[1])]),
             main(["run", str(cfg), "--out", str(outs[2]), "--seed", "7"])]
    assert codes[0] == codes[1] == EXIT_FAILED  # four generations never meet the rule
    for name in ("result.json", "history.csv", "path.csv", "theta5.csv", "spectrum.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert json.loads((outs[2] / "result.json").read_text())["seed"] == 7
    result = json.loads((outs[0] / "result.json").read_text())
    assert result["status"] == "not-converged" and result["termination"] == "generation-cap"
    assert [r["generation"] for r in read_csv(outs[0] / "history.csv")] == list("01234")


def test_spectrum_command(tmp_path):
    x = 2 * np.pi * np.arange(24) / 24
    sig = tmp_path / "sig.csv"
    sig.write_text("y\n" + "\n".join(repr(float(3 * np.sin(v))) for v in x) + "\n")
    out = tmp_path / "out"
    assert main(["spectrum", str(sig), "--orders", "3", "--out", str(out)]) == EXIT_OK
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "order,magnitude,phase" and lines[1] == "1,3.0,90.0"
    assert main(["spectrum", str(sig), "--orders", "12", "--out", str(out)]) == EXIT_CONFIG
    assert main(["spectrum", str(tmp_path / "nope.csv"), "--out", str(out)]) == EXIT_CONFIG


def test_schema_error_points_at_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(
        '{\n  "problem": "fivebar-analysis",\n  "path": {"file": "reference"},\n'
        '  "geometry": {"p": "sixteen", "q": 24, "r": 30, "s": 16,\n'
        '               "cv_x": 0, "cv_y": 1, "servo_x": 27, "servo_y": -2}\n}\n')
    assert main(["run", str(bad)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "bad.json:4" in err and "geometry/p" in err


@pytest.mark.parametrize("cfg, fragment", [
    ({"problem": "fivebar-analysis", "path": {"file": "missing.csv"},
      "geometry": {"p": 16, "q": 24, "r": 30, "s": 16, "cv_x": 0, "cv_y": 1,
                   "servo_x": 27, "servo_y": -2}}, "not found"),
    ({"problem": "fivebar-synthesis", "path": {"file": "reference"}}, "bounds"),
    ({"problem": "warp-drive"}, "problem"),
])
def test_config_errors(tmp_path, capsys, cfg, fragment):
    assert main(["run", str(write(tmp_path / "c.json", cfg)), "--out", str(tmp_path)]) \
        == EXIT_CONFIG
    assert fragment in capsys.readouterr().err


def test_malformed_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"problem": ')
    assert main(["run", str(p)]) == EXIT_CONFIG


def test_bundled_configs_validate():
    for name in ("analysis", "synthesis", "needle"):
        assert load_config(CONFIGS / f"{name}.json")["problem"]


def test_log_level_from_environment(tmp_path):
    cmd = [sys.executable, "-m", "mechharmonic", "run", str(CONFIGS / "analysis.json"),
           "--out", str(tmp_path)]
    loud = subprocess.run(cmd, capture_output=True, text=True,
                          env={**os.environ, "MECHHARMONIC_LOG": "INFO"})
    quiet = subprocess.run(cmd, capture_output=True, text=True,
                           env={**os.environ, "MECHHARMONIC_LOG": "bogus"})
    assert loud.returncode == quiet.returncode == EXIT_OK
    assert "finished with status ok" in loud.stderr
    assert quiet.stderr == ""
