import json

import pytest

from kpzeternal.errors import ConfigError
from kpzeternal.harness.cli import main
from kpzeternal.harness.config import parse_config
from kpzeternal.harness.manifest import check_manifest, write_manifest

SMALL_THREE = """
[run]
name = small
corpus = three-color
[grid]
x_min = -1
x_max = 1
t_min = -1
t_max = 0.5
spacing = 0.1
dt = 0.1
"""

SMALL_LPP = """
[run]
backend = lpp
corpus = lattice-three-color
seed = 3
[lpp]
n = 40
horizon = 160
replicas = 4
depth = 5
samples = 10
x_min = -1
x_max = 1
t_min = -0.5
t_max = 0.5
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_config_defaults_and_digest():
    cfg = parse_config(SMALL_THREE)
    assert cfg.grid.window == (-1.0, 1.0, -1.0, 0.5)
    assert cfg.backend == "parabolic" and cfg.seed == 0
    assert cfg.digest() == parse_config(SMALL_THREE).digest()
    assert cfg.digest() != parse_config(SMALL_THREE + "\n# x\n").digest()


@pytest.mark.parametrize("text", [
    "[run]\nbogus = 1\n",
    "[other]\na = 1\n",
    "[run]\nbackend = quantum\n",
    "[grid]\nspacing = -1\n",
    "[lpp]\nn = many\n",
    "[run]\nseed = 1.5\n",
    "no section\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_manifest_detects_changes(tmp_path):
    (tmp_path / "a.txt").write_text("a")
    (tmp_path / "b.txt").write_text("b")
    path = write_manifest(tmp_path, ["b.txt", "a.txt"], {"seed": "1"})
    lines = path.read_text().splitlines()
    assert lines[0] == "seed=1" and lines[1].endswith("  a.txt") and lines[2].endswith("  b.txt")
    assert check_manifest(tmp_path) == []
    (tmp_path / "b.txt").write_text("changed")
    assert check_manifest(tmp_path) == ["b.txt"]


def test_simulate_is_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL_THREE)
    assert main(["simulate", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", cfg, "--out", str(tmp_path / "b")]) == 0
    ma = (tmp_path / "a" / "manifest.txt").read_text()
    assert ma == (tmp_path / "b" / "manifest.txt").read_text()
    assert "check.structure=pass" in ma and "name=small" in ma
    for name in ("height.csv", "busemann.csv", "geodesics.csv", "interfaces.csv", "colormap.csv"):
        assert (tmp_path / "a" / name).read_text().count("\n") > 1
    tree = json.loads((tmp_path / "a" / "shock_tree.json").read_text())
    assert len(tree["nodes"]) == 1
    assert check_manifest(tmp_path / "a") == []


def test_simulate_lattice(tmp_path):
    cfg = write(tmp_path, SMALL_LPP)
    assert main(["simulate", cfg, "--out", str(tmp_path / "l")]) == 0
    text = (tmp_path / "l" / "manifest.txt").read_text()
    assert "backend=lpp" in text and "lpp.n=40" in text


def test_exit_codes(tmp_path):
    assert main(["simulate", write(tmp_path, "[run]\nbogus = 1\n")]) == 2
    assert main(["simulate", str(tmp_path / "missing.ini")]) == 2
    gate = SMALL_THREE.replace("three-color", "quadratic-integers")
    assert main(["simulate", write(tmp_path, gate, "gate.ini"), "--out", str(tmp_path / "g")]) == 3
    deep = SMALL_LPP + "max_sites = 1000\n"
    assert main(["simulate", write(tmp_path, deep, "deep.ini"), "--out", str(tmp_path / "d")]) == 4
    (tmp_path / "empty").mkdir()
    assert main(["export-plots", str(tmp_path / "empty")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", write(tmp_path, SMALL_THREE), "--suite", "nonexistent"])
    assert exc.value.code == 2


def test_verify_single_suite(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_THREE)
    report = tmp_path / "report.txt"
    assert main(["verify", cfg, "--suite", "busemann-props", "--report", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines and all(line.split("\t")[1] == "PASS" for line in lines)
    assert capsys.readouterr().out.splitlines() == lines


def test_verify_lattice_exact(tmp_path):
    assert main(["verify", write(tmp_path, SMALL_LPP), "--suite", "lpp-exact"]) == 0


def test_export_plots_twice(tmp_path):
    cfg = write(tmp_path, SMALL_THREE)
    run = tmp_path / "r"
    assert main(["simulate", cfg, "--out", str(run)]) == 0
    assert main(["export-plots", str(run)]) == 0
    first = {p.name: p.read_bytes() for p in (run / "plots").iterdir()}
    assert main(["export-plots", str(run)]) == 0
    assert {p.name: p.read_bytes() for p in (run / "plots").iterdir()} == first
    for name in ("raster.dat", "borders.dat", "extinctions.dat", "geodesics.dat", "interfaces.dat"):
        assert first[name].startswith(b"# ")


def test_calibrate_small(tmp_path):
    cfg = write(tmp_path, SMALL_LPP)
    assert main(["calibrate", cfg, "--out", str(tmp_path / "c")]) == 0
    text = (tmp_path / "c" / "calibration.txt").read_text()
    assert "spread." in text and "rate." in text
