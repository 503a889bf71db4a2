"""Experiment configuration: a flat file of dotted keys (TOML syntax).

Example::

    experiment = "gap_sweep"
    output_dir = "out/gap"
    seeds = [0, 1, 2]
    disc.width = 4
    sweep.n = [50, 200]
    sweep.lambda = [0.0, 0.5]
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli

from .bounds import COROLLARIES
from .classes import Activation, ClassSpec
from .dist import KINDS, SourceSpec

EXPERIMENTS = ("rademacher", "bounds", "gap_sweep", "train")

BOUND_NAMES = (
    "massart_bound_disc",
    "lipschitz_entropy_bound",
    "composition_bound",
    "nondecreasing_closed_form",
    "dudley_lipschitz",
    "dudley_nondecreasing",
) + COROLLARIES


class ConfigError(ValueError):
    pass


# every accepted key with its default; None marks a required key
DEFAULTS: dict[str, Any] = {
    "experiment": None,
    "output_dir": None,
    "seeds": None,
    "workers": 1,
    "delta": 0.025,
    "disc.input_dim": 2,
    "disc.width": 4,
    "disc.activation": "clamp01",
    "gen.input_dim": 2,
    "gen.width": 4,
    "gen.activation": "clamp01",
    "px.kind": "independent_beta",
    "px.alpha": 2.0,
    "px.beta": 5.0,
    "px.seed": 0,
    "px.path": "",
    "pz.kind": "uniform_cube",
    "pz.alpha": 2.0,
    "pz.beta": 5.0,
    "pz.seed": 1,
    "pz.path": "",
    "sweep.n": None,
    "sweep.m": [],
    "sweep.V": [1.0],
    "sweep.lambda": [0.0],
    "sweep.width": [],
    "opt.step_size": 0.2,
    "opt.steps": 100,
    "opt.restarts": 4,
    "opt.inner_disc_steps": 2,
    "opt.init_scale": 1.0,
    "objective.phi": "identity",
    "objective.phi_floor": 1e-6,
    "objective.mc_samples": 10000,
    "gap.mode": "er1",
    "gap.holdout": 100000,
    "complexity.tau_draws": 8,
    "complexity.restarts": 2,
    "complexity.steps": 60,
    "complexity.step_size": 0.2,
    "rademacher.grid_levels": [3],
    "rademacher.modes": ["exact_enumeration"],
    "rademacher.tau_draws": 100,
    "rademacher.restarts": 20,
    "rademacher.max_work": 1000000,
    "bounds.names": list(BOUND_NAMES),
    "bounds.variants": ["verbatim", "conservative"],
    "bounds.grid_levels": 3,
    "bounds.C": 1.0,
    "bounds.C1": 1.0,
    "bounds.delta_grid": 64,
}


@dataclass
class ExperimentConfig:
    experiment: str
    output_dir: Path
    seeds: list[int]
    values: dict[str, Any] = field(default_factory=dict)
    source_text: str = ""

    def __getitem__(self, key: str):
        return self.values[key]

    def class_spec(self, role: str, V: float, width: int | None = None) -> ClassSpec:
        v = self.values
        if role == "disc":
            return ClassSpec(v["disc.input_dim"], width or v["disc.width"], v["disc.activation"], V, 1)
        return ClassSpec(v["gen.input_dim"], width or v["gen.width"], v["gen.activation"], V, v["disc.input_dim"])

    def source(self, role: str) -> SourceSpec:
        v = self.values
        dim = v["disc.input_dim"] if role == "px" else v["gen.input_dim"]
        return SourceSpec(v[f"{role}.kind"], dim, v[f"{role}.seed"], v[f"{role}.alpha"], v[f"{role}.beta"], v[f"{role}.path"] or None)

    def sample_pairs(self) -> list[tuple[int, int]]:
        ns, ms = self.values["sweep.n"], self.values["sweep.m"]
        if not ms:
            return [(n, n) for n in ns]
        return [(n, m) for n in ns for m in ms]

    def to_dict(self) -> dict:
        d = dict(self.values)
        d["output_dir"] = str(self.output_dir)
        return d


def _flatten(d: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(r"^\s*" + re.escape(key).replace(r"\.", r"\s*\.\s*") + r"\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def _where(text: str, key: str) -> str:
    line = _line_of(text, key)
    return f"line {line}, field {key!r}" if line else f"field {key!r}"


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    flat = _flatten(raw)

    def fail(key, msg):
        raise ConfigError(f"{_where(text, key)}: {msg}")

    for key in flat:
        if key not in DEFAULTS:
            fail(key, "unknown key")
    values = {}
    for key, default in DEFAULTS.items():
        if key in flat:
            values[key] = flat[key]
        elif default is None:
            fail(key, "required key is missing")
        else:
            values[key] = list(default) if isinstance(default, list) else default

    exp = values["experiment"]
    if exp not in EXPERIMENTS:
        fail("experiment", f"must be one of {EXPERIMENTS}, got {exp!r}")

    # type checks
    for key, default in DEFAULTS.items():
        v = values[key]
        if key in ("experiment", "output_dir") or key.endswith((".kind", ".activation", ".path", ".phi", ".mode")):
            if not isinstance(v, str):
                fail(key, f"expected a string, got {v!r}")
        elif isinstance(default, list) or key in ("seeds", "sweep.n"):
            if not isinstance(v, list):
                fail(key, f"expected a list, got {v!r}")
        elif _is_int(default):
            if not _is_int(v):
                fail(key, f"expected an integer, got {v!r}")
        elif isinstance(default, float) and not _is_num(v):
            fail(key, f"expected a number, got {v!r}")

    seeds = values["seeds"]
    if not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        fail("seeds", "must be a non-empty list of non-negative integers")
    if len(set(seeds)) != len(seeds):
        fail("seeds", "seeds must be distinct")
    for key in ("sweep.n", "sweep.V", "sweep.lambda"):
        if not values[key]:
            fail(key, "sweep list must be non-empty")
    for key in ("sweep.n", "sweep.m", "sweep.width", "rademacher.grid_levels"):
        if not all(_is_int(x) and x >= 1 for x in values[key]):
            fail(key, "entries must be positive integers")
    if not all(_is_num(x) and x >= 0 for x in values["sweep.V"]):
        fail("sweep.V", "entries must be non-negative numbers")
    if not all(_is_num(x) and x >= 0 for x in values["sweep.lambda"]):
        fail("sweep.lambda", "entries must be non-negative numbers")
    if not 0 < values["delta"] < 1:
        fail("delta", "must lie in (0, 1)")
    for role in ("disc", "gen"):
        if values[f"{role}.activation"] not in {a.value for a in Activation}:
            fail(f"{role}.activation", f"unknown activation {values[role + '.activation']!r}")
        for k in ("input_dim", "width"):
            if values[f"{role}.{k}"] < 1:
                fail(f"{role}.{k}", "must be positive")
    for role in ("px", "pz"):
        if values[f"{role}.kind"] not in KINDS:
            fail(f"{role}.kind", f"must be one of {KINDS}")
        if values[f"{role}.kind"] == "fixed_dataset" and not values[f"{role}.path"]:
            fail(f"{role}.path", "fixed_dataset needs a path")
        if values[f"{role}.path"] and base_dir is not None and not Path(values[f"{role}.path"]).is_absolute():
            values[f"{role}.path"] = str(base_dir / values[f"{role}.path"])
    if values["gap.mode"] not in ("er1", "er2"):
        fail("gap.mode", "must be 'er1' or 'er2'")
    if values["objective.phi"] not in ("identity", "guarded_log"):
        fail("objective.phi", "must be 'identity' or 'guarded_log'")
    if values["gap.holdout"] < 10_000:
        fail("gap.holdout", "must be >= 10000")
    for key in ("opt.steps", "opt.restarts", "opt.inner_disc_steps", "objective.mc_samples", "complexity.tau_draws",
                "complexity.restarts", "complexity.steps", "rademacher.tau_draws", "rademacher.restarts", "workers"):
        if values[key] < 1:
            fail(key, "must be >= 1")
    for m in values["rademacher.modes"]:
        if m not in ("exact_enumeration", "monte_carlo"):
            fail("rademacher.modes", f"unknown mode {m!r}")
    for g in values["rademacher.grid_levels"]:
        if g < 3 or g % 2 == 0:
            fail("rademacher.grid_levels", "grid levels must be odd and >= 3")
    for name in values["bounds.names"]:
        if name not in BOUND_NAMES:
            fail("bounds.names", f"unknown bound {name!r}")
    for var in values["bounds.variants"]:
        if var not in ("verbatim", "conservative"):
            fail("bounds.variants", f"unknown variant {var!r}")

    out = Path(values["output_dir"])
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    return ExperimentConfig(exp, out, list(seeds), values, text)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=p.resolve().parent)

