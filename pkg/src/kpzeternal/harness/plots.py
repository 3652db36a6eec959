"""Layered plot-data files derived from a finished run directory.

Every file is whitespace-separated text with one ``#`` header line naming
the columns. Rendering to PNG needs matplotlib and is optional.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from ..errors import ConfigError
from .manifest import MANIFEST, atomic_write, write_manifest

PLOT_DIR = "plots"
LAYERS = ("raster.dat", "borders.dat", "extinctions.dat", "geodesics.dat", "interfaces.dat")


class RunNotFound(ConfigError):
    pass


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _text(header, rows) -> bytes:
    lines = ["# " + " ".join(header)] + [" ".join(str(v) for v in r) for r in rows]
    return ("\n".join(lines) + "\n").encode()


def export_plots(run_dir, render: bool = False) -> Path:
    run = Path(run_dir)
    if not (run / MANIFEST).is_file():
        raise RunNotFound(f"{run} holds no finished run (missing {MANIFEST})")
    out = run / PLOT_DIR
    raster = _rows(run / "colormap.csv")
    palette = sorted({(float(r["eta"]), r["sign"]) for r in raster}, key=lambda d: (d[0], d[1] == "+"))
    index = {d: k for k, d in enumerate(palette)}
    atomic_write(out / "raster.dat", _text(
        ["t", "x", "color_index", "eta", "sign"],
        [(r["t"], r["x"], index[(float(r["eta"]), r["sign"])], r["eta"], r["sign"]) for r in raster]))
    tree = json.loads((run / "shock_tree.json").read_text())
    atomic_write(out / "borders.dat", _text(
        ["edge", "left", "right", "t", "x"],
        [(k, e["left"], e["right"], t, x) for k, e in enumerate(tree["edges"]) for t, x in e["points"]]))
    atomic_write(out / "extinctions.dat", _text(
        ["t", "x", "color"], [(n["t"], n["x"], n["color"]) for n in tree["nodes"]]))
    atomic_write(out / "geodesics.dat", _text(
        ["root", "side", "s", "g"], [(r["root"], r["side"], r["s"], r["g"]) for r in _rows(run / "geodesics.csv")]))
    atomic_write(out / "interfaces.dat", _text(
        ["left", "right", "t", "tau"],
        [(r["left"], r["right"], r["t"], r["tau"]) for r in _rows(run / "interfaces.csv")]))
    names = list(LAYERS)
    if render:
        _render(out, raster, index, tree)
        names.append("coloring.png")
    write_manifest(out, names, {"source": str(run.resolve().name)})
    return out


def _render(out: Path, raster, index, tree) -> None:
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("rendering needs matplotlib (install the 'plots' extra)") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter([float(r["x"]) for r in raster], [float(r["t"]) for r in raster],
               c=[index[(float(r["eta"]), r["sign"])] for r in raster], s=2, marker="s", cmap="tab10")
    for e in tree["edges"]:
        pts = e["points"]
        ax.plot([x for _, x in pts], [t for t, _ in pts], color="k", lw=1)
    for n in tree["nodes"]:
        ax.plot(n["x"], n["t"], "o", color="red")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    fig.savefig(out / "coloring.png", dpi=100, metadata={"Software": None})
    plt.close(fig)
