"""Experiment tasks, row computation and CSV / manifest emission."""

from __future__ import annotations

import csv
import io
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    COROLLARIES,
    composition_bound,
    corollary_bounds,
    dudley_bound,
    lipschitz_entropy_bound,
    massart_bound_disc,
    nondecreasing_closed_form,
)
from .classes import enumerate_finite_class, finite_class_cardinality
from .config import ExperimentConfig
from .dist import sample
from .objective import ObjectiveConfig, Phi
from .optim import ComplexityConfig, OptConfig, measure_gap, minimax_train, training_batches
from .rademacher import empirical_rademacher, exact_rademacher

RADEMACHER_STREAM = 29

COLUMNS = {
    "gap_sweep": [
        "experiment", "seed", "n", "m", "d_x", "d_z", "V", "lambda", "delta",
        "value_empirical", "value_population", "gap",
        "rademacher_D", "rademacher_DG", "rademacher_G",
        "bound_verbatim", "bound_conservative",
    ],
    "rademacher": [
        "seed", "n", "V", "width", "grid_levels", "mode", "estimate", "std_error", "massart_bound", "dominance_ok",
    ],
    "bounds": [
        "name", "variant", "value", "V", "n", "m", "card_D", "card_G", "delta", "lambda", "Q_x", "Q_z", "C", "C1", "t",
    ],
    "train": ["seed", "n", "m", "V", "lambda", "value", "trained_disc_value", "steps"],
}

# columns identifying a row; rows are written sorted by these
KEYS = {
    "gap_sweep": ["n", "m", "V", "lambda", "seed"],
    "rademacher": ["n", "V", "width", "grid_levels", "mode", "seed"],
    "bounds": ["name", "variant", "n", "m", "V", "lambda"],
    "train": ["n", "m", "V", "lambda", "seed"],
}


class ExperimentError(RuntimeError):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def tasks(cfg: ExperimentConfig) -> list[dict]:
    v = cfg.values
    exp = cfg.experiment
    out = []
    if exp in ("gap_sweep", "train"):
        for n, m in cfg.sample_pairs():
            for V in v["sweep.V"]:
                for lam in v["sweep.lambda"]:
                    for seed in cfg.seeds:
                        out.append(dict(n=n, m=m, V=float(V), **{"lambda": float(lam)}, seed=seed))
    elif exp == "rademacher":
        widths = v["sweep.width"] or [v["disc.width"]]
        for n in v["sweep.n"]:
            for V in v["sweep.V"]:
                for width in widths:
                    for g in v["rademacher.grid_levels"]:
                        for mode in v["rademacher.modes"]:
                            for seed in cfg.seeds:
                                out.append(dict(n=n, V=float(V), width=width, grid_levels=g, mode=mode, seed=seed))
    else:
        for name in v["bounds.names"]:
            variants = v["bounds.variants"] if name in COROLLARIES else ["closed_form"]
            for variant in variants:
                for n, m in cfg.sample_pairs():
                    for V in v["sweep.V"]:
                        for lam in v["sweep.lambda"]:
                            out.append(dict(name=name, variant=variant, n=n, m=m, V=float(V), **{"lambda": float(lam)}))
    return out


def _opt(cfg: ExperimentConfig, seed: int) -> OptConfig:
    v = cfg.values
    return OptConfig(v["opt.step_size"], v["opt.steps"], v["opt.restarts"], v["opt.inner_disc_steps"], seed, v["opt.init_scale"])


def _gap_row(cfg: ExperimentConfig, t: dict) -> dict:
    v = cfg.values
    d_spec, g_spec = cfg.class_spec("disc", t["V"]), cfg.class_spec("gen", t["V"])
    obj = ObjectiveConfig(t["lambda"], Phi(v["objective.phi"], v["objective.phi_floor"]), v["objective.mc_samples"], t["seed"])
    cx = ComplexityConfig(v["complexity.tau_draws"], v["complexity.restarts"], v["complexity.steps"], v["complexity.step_size"])
    rec = measure_gap(
        d_spec, g_spec, t["n"], t["m"], t["lambda"], _opt(cfg, t["seed"]), obj, v["gap.holdout"],
        cfg.source("px"), cfg.source("pz"), v["gap.mode"], v["delta"], cx,
    )
    return {
        "experiment": "gap_sweep", "seed": t["seed"], "n": t["n"], "m": t["m"], "d_x": rec.d_x, "d_z": rec.d_z,
        "V": t["V"], "lambda": t["lambda"], "delta": v["delta"],
        "value_empirical": rec.value_empirical, "value_population": rec.value_population, "gap": rec.gap,
        "rademacher_D": rec.rademacher_D, "rademacher_DG": rec.rademacher_DG, "rademacher_G": rec.rademacher_G,
        "bound_verbatim": rec.bound_verbatim, "bound_conservative": rec.bound_conservative,
    }


def _train_row(cfg: ExperimentConfig, t: dict) -> dict:
    d_spec, g_spec = cfg.class_spec("disc", t["V"]), cfg.class_spec("gen", t["V"])
    X, Z = training_batches(cfg.source("px"), cfg.source("pz"), t["n"], t["m"], t["seed"])
    res = minimax_train(d_spec, g_spec, X, Z, t["lambda"], _opt(cfg, t["seed"]))
    return dict(t, value=res.value, trained_disc_value=res.trained_disc_value, steps=cfg["opt.steps"])


def _rademacher_row(cfg: ExperimentConfig, t: dict) -> dict:
    v = cfg.values
    spec = cfg.class_spec("disc", t["V"], t["width"])
    S = sample(cfg.source("px"), t["n"], (RADEMACHER_STREAM, t["seed"]))
    if t["V"] == 0:
        card = 1
    else:
        card = finite_class_cardinality(spec, t["grid_levels"])
    if t["mode"] == "exact_enumeration":
        fc = enumerate_finite_class(spec, t["grid_levels"], cap=v["rademacher.max_work"])
        est = exact_rademacher(fc, spec.activation, S, max_work=v["rademacher.max_work"])
    else:
        ocfg = OptConfig(v["opt.step_size"], v["opt.steps"], v["rademacher.restarts"], 1, t["seed"], v["opt.init_scale"])
        est = empirical_rademacher(spec, S, v["rademacher.tau_draws"], v["rademacher.restarts"], ocfg)
    mb = massart_bound_disc(t["V"], t["n"], card)
    return dict(t, estimate=est.mean, std_error=est.std_error, massart_bound=mb, dominance_ok=bool(est.mean <= mb))


def _bounds_row(cfg: ExperimentConfig, t: dict) -> dict:
    v = cfg.values
    V, n, m, lam, name = t["V"], t["n"], t["m"], t["lambda"], t["name"]
    d_spec, g_spec = cfg.class_spec("disc", V), cfg.class_spec("gen", V)
    head = type(g_spec)(g_spec.input_dim, g_spec.width, g_spec.activation, V, 1)
    g = v["bounds.grid_levels"]
    card_D = finite_class_cardinality(d_spec, g) if V > 0 else 1
    card_G = finite_class_cardinality(head, g) if V > 0 else 1
    C, C1, delta = v["bounds.C"], v["bounds.C1"], v["delta"]
    Qx, Qz = d_spec.envelope, g_spec.envelope
    tt = n + 1
    if name == "massart_bound_disc":
        val = massart_bound_disc(V, n, card_D)
    elif name == "lipschitz_entropy_bound":
        val = lipschitz_entropy_bound(V, n, C1)
    elif name == "composition_bound":
        val = composition_bound(V, m, card_G)
    elif name == "nondecreasing_closed_form":
        val = nondecreasing_closed_form(C, V, n)
    elif name == "dudley_lipschitz":
        val = dudley_bound("lipschitz", V, n, None, v["bounds.delta_grid"])
    elif name == "dudley_nondecreasing":
        val = dudley_bound("nondecreasing", V, n, tt, v["bounds.delta_grid"])
    else:
        inputs = dict(V=V, n=n, m=m, card_D=card_D, card_G=card_G, Q_x=Qx, Q_z=Qz, delta=delta, lambda_=lam, C=C, C1=C1)
        val = corollary_bounds(name, inputs, t["variant"]).value
    return dict(t, value=val, card_D=card_D, card_G=card_G, delta=delta, Q_x=Qx, Q_z=Qz, C=C, C1=C1, t=tt)


ROW_FUNCS = {"gap_sweep": _gap_row, "train": _train_row, "rademacher": _rademacher_row, "bounds": _bounds_row}


def run_task(cfg: ExperimentConfig, task: dict) -> tuple[dict, float]:
    """Compute one row in isolation; returns the row and its runtime in ms."""
    t0 = time.perf_counter()
    try:
        row = ROW_FUNCS[cfg.experiment](cfg, task)
    except Exception as exc:
        raise ExperimentError(f"{cfg.experiment} task {task} failed in {type(exc).__name__}: {exc}") from exc
    return row, 1000.0 * (time.perf_counter() - t0)


def _run_task_star(args):
    return run_task(*args)


def sort_key(experiment: str, row: dict):
    return tuple(row[k] for k in KEYS[experiment])


def run_all(cfg: ExperimentConfig) -> list[tuple[dict, float]]:
    ts = tasks(cfg)
    workers = cfg["workers"]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task_star, [(cfg, t) for t in ts]))
    else:
        results = [run_task(cfg, t) for t in ts]
    return sorted(results, key=lambda r: sort_key(cfg.experiment, r[0]))


def csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, results: list[tuple[dict, float]], wall_time: float) -> dict[str, Path]:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    cols = COLUMNS[cfg.experiment]
    rows = [r for r, _ in results]
    paths = {"results": out / "results.csv", "timings": out / "timings.csv", "manifest": out / "manifest.json"}
    paths["results"].write_text(csv_text(cols, rows))
    keys = KEYS[cfg.experiment]
    paths["timings"].write_text(csv_text(keys + ["runtime_ms"], [dict(r, runtime_ms=ms) for r, ms in results]))
    manifest = {
        "artifact": "genbound",
        "version": __version__,
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "config_text": cfg.source_text,
        "columns": cols,
        "row_key": keys,
        "rows": len(rows),
        "wall_time_s": wall_time,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "recompute": "genbound.experiments.run_task(config, {key columns of the row}) reproduces any row",
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths
