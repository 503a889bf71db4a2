"""Static SVG figures from results CSVs.

Artists carry ``gid`` attributes (``seed-scatter``, ``median-line``,
``bound-curve``, ...) so the emitted files can be inspected by element.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = {
    "gap_vs_n": ["n", "seed", "gap", "bound_conservative"],
    "bound_vs_empirical": ["gap", "bound_conservative", "bound_verbatim"],
    "complexity_vs_n": ["n", "mode", "estimate", "massart_bound"],
}


class SchemaError(ValueError):
    pass


def read_csv(path: str | Path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = list(reader.fieldnames or [])
        return header, list(reader)


def _col(rows, name) -> np.ndarray:
    return np.array([float(r[name]) for r in rows])


def _medians(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    groups = defaultdict(list)
    for a, b in zip(x, y):
        groups[a].append(b)
    xs = np.array(sorted(groups))
    return xs, np.array([np.median(groups[a]) for a in xs])


def _log_y(ax, y: np.ndarray) -> None:
    # symlog so exact zeros (saturated discriminators, the zero class) stay on the canvas
    pos = y[y > 0]
    ax.set_yscale("symlog", linthresh=float(pos.min()) if pos.size else 1e-6)


def plot(results_csv: str | Path, kind: str, out: str | Path) -> Path:
    if kind not in KINDS:
        raise SchemaError(f"unknown plot kind {kind!r}; expected one of {sorted(KINDS)}")
    header, rows = read_csv(results_csv)
    missing = [c for c in KINDS[kind] if c not in header]
    if missing:
        raise SchemaError(f"{results_csv} lacks columns required by {kind}: {', '.join(missing)}")

    plt.rcParams["svg.hashsalt"] = "genbound"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if kind == "gap_vs_n":
        n, gap, bound = _col(rows, "n"), np.abs(_col(rows, "gap")), _col(rows, "bound_conservative")
        ax.scatter(n, gap, s=12, alpha=0.5, label="|gap| per seed", gid="seed-scatter")
        if rows:
            xs, med = _medians(n, gap)
            ax.plot(xs, med, marker="o", label="median |gap|", gid="median-line")
            xs, bmed = _medians(n, bound)
            ax.plot(xs, bmed, linestyle="--", label="conservative bound", gid="bound-curve")
        ax.set_xscale("log")
        _log_y(ax, np.concatenate([gap, bound]))
        ax.set_xlabel("sample size n")
        ax.set_ylabel("|empirical - population|")
    elif kind == "bound_vs_empirical":
        gap, cons, verb = _col(rows, "gap"), _col(rows, "bound_conservative"), _col(rows, "bound_verbatim")
        ax.scatter(cons, gap, s=12, alpha=0.6, label="conservative", gid="conservative-scatter")
        ax.scatter(verb, gap, s=12, alpha=0.6, marker="x", label="verbatim", gid="verbatim-scatter")
        if rows:
            lo = min(gap.min(), verb.min(), 0.0)
            hi = max(cons.max(), gap.max())
            ax.plot([lo, hi], [lo, hi], color="k", linewidth=0.8, label="gap = bound", gid="diagonal")
        ax.set_xlabel("bound value")
        ax.set_ylabel("measured gap")
    else:
        n, est, mb = _col(rows, "n"), _col(rows, "estimate"), _col(rows, "massart_bound")
        modes = sorted({r["mode"] for r in rows})
        for mode in modes:
            sel = np.array([r["mode"] == mode for r in rows])
            ax.scatter(n[sel], est[sel], s=12, alpha=0.5, label=mode, gid=f"{mode}-scatter")
            xs, med = _medians(n[sel], est[sel])
            ax.plot(xs, med, marker="o", gid=f"{mode}-median")
        if rows:
            xs, bmed = _medians(n, mb)
            ax.plot(xs, bmed, linestyle="--", label="Massart bound", gid="bound-curve")
        ax.set_xscale("log")
        _log_y(ax, np.concatenate([est, mb]))
        ax.set_xlabel("sample size n")
        ax.set_ylabel("Rademacher complexity")
    if rows:
        ax.legend(fontsize=8)
    ax.set_title(kind.replace("_", " "))
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return out
