import json
import subprocess
import sys
from pathlib import Path

import pytest

from apernet.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_gen_golden(workdir, capsys):
    code, out, _ = run(["gen", "-c", str(CONFIGS / "golden_gen.json"), "--set", "window.upper=[10.0]"], capsys)
    assert code == 0
    assert json.loads(out)["points"] == 6
    body = (workdir / "golden_points.txt").read_text().splitlines()[1:]
    assert [float(b) for b in body] == [0, 2, 4, 5, 7, 10]


@pytest.mark.parametrize("name,command", [
    ("golden_discrepancy.json", "discrepancy"),
    ("et_bound.json", "et-bound"),
    ("dioph.json", "dioph"),
    ("match.json", "match"),
    ("correlate.json", "correlate"),
])
def test_shipped_configs(workdir, capsys, name, command):
    code, out, err = run([command, "-c", str(CONFIGS / name)], capsys)
    assert code == 0, err
    json.loads(out)


def test_selberg_small(workdir, capsys):
    code, out, _ = run(["selberg", "-c", str(CONFIGS / "selberg.json"), "--set", "instances=2", "--set", "samples=500"], capsys)
    assert code == 0 and json.loads(out)["max_violation"] == 0.0


def test_report(workdir, capsys):
    run(["correlate", "-c", str(CONFIGS / "correlate.json")], capsys)
    code, out, _ = run(["report", "correlate.json", "-o", "rep.json"], capsys)
    assert code == 0
    rep = json.loads((workdir / "rep.json").read_text())
    assert rep["result"]["entries"]["correlate.json"]["command"] == "correlate"


def test_envelope(workdir, capsys):
    run(["correlate", "-c", str(CONFIGS / "correlate.json"), "--seed", "3"], capsys)
    data = json.loads((workdir / "correlate.json").read_text())
    assert data["format_version"] == 1 and data["seed"] == 3 and data["command"] == "correlate"
    assert data["config"]["Q"] == [[1, 0]]
    assert "threads" not in json.dumps(data)


def test_config_errors(workdir, capsys):
    assert run(["discrepancy", "--set", "flow={\"acting_basis\": [[1, 1.5]], \"base_point\": [0, 0]}"], capsys)[0] == 2
    assert run(["gen", "-c", "missing.json"], capsys)[0] == 2
    assert run(["match", "--set", "Y={}"], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["gen", "--set", "novalue"], capsys)[0] == 2


def test_runtime_error(workdir, capsys):
    # a non-transverse section is a valid config but fails at run time
    args = ["gen", "-c", str(CONFIGS / "golden_gen.json"), "--set", "flow.acting_basis=[[0.0, 1.0]]"]
    code, _, err = run(args, capsys)
    assert code == 1 and "error" in err


@pytest.mark.parametrize("command,name,outputs", [
    ("gen", "golden_gen.json", ["golden_points.txt"]),
    ("discrepancy", "golden_discrepancy.json", ["golden_discrepancy.csv", "golden_discrepancy.json"]),
    ("dioph", "dioph.json", ["dioph.csv", "dioph.json"]),
])
def test_threads_byte_identical(tmp_path, monkeypatch, capsys, command, name, outputs):
    blobs = []
    for t in (1, 2, 8):
        d = tmp_path / f"t{t}"
        d.mkdir()
        monkeypatch.chdir(d)
        assert run([command, "-c", str(CONFIGS / name), "--threads", str(t)], capsys)[0] == 0
        blobs.append([(d / o).read_bytes() for o in outputs])
    assert blobs[0] == blobs[1] == blobs[2]


def test_module_entry(workdir):
    res = subprocess.run([sys.executable, "-m", "apernet", "gen", "-c", str(CONFIGS / "golden_gen.json"), "--set", "window.upper=[10.0]"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["points"] == 6
