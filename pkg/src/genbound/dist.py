"""Seeded synthetic sources on the unit cube.

Every draw is keyed by ``(seed, stream_id)`` through numpy's ``SeedSequence``
spawn keys, so streams are reproducible and independent of call order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np


class SourceError(ValueError):
    pass


KINDS = ("uniform_cube", "independent_beta", "fixed_dataset")


@dataclass(frozen=True)
class SourceSpec:
    kind: str = "uniform_cube"
    dim: int = 1
    seed: int = 0
    alpha: float = 2.0
    beta: float = 5.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SourceError(f"unknown source kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise SourceError(f"dim must be positive, got {self.dim}")
        if self.seed < 0:
            raise SourceError(f"seed must be non-negative, got {self.seed}")
        if self.kind == "independent_beta" and (self.alpha <= 0 or self.beta <= 0):
            raise SourceError(f"beta parameters must be positive, got ({self.alpha}, {self.beta})")
        if self.kind == "fixed_dataset" and not self.path:
            raise SourceError("fixed_dataset needs a path")

    def with_seed(self, seed: int) -> SourceSpec:
        return SourceSpec(self.kind, self.dim, seed, self.alpha, self.beta, self.path)


def default_px(dim: int, seed: int = 0) -> SourceSpec:
    return SourceSpec("independent_beta", dim, seed, 2.0, 5.0)


def default_pz(dim: int, seed: int = 0) -> SourceSpec:
    return SourceSpec("uniform_cube", dim, seed)


def rng_for(seed: int, stream_id: int | Sequence[int]) -> np.random.Generator:
    key = (stream_id,) if isinstance(stream_id, (int, np.integer)) else tuple(stream_id)
    if any(k < 0 for k in key):
        raise SourceError(f"stream ids must be non-negative, got {key}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))))


@lru_cache(maxsize=16)
def _load_dataset(path: str, dim: int) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise SourceError(f"dataset file not found: {path}")
    rows = []
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            vals = [float(t) for t in s.split()]
        except ValueError as exc:
            raise SourceError(f"{path}:{lineno}: not a list of reals ({exc})") from None
        if len(vals) != dim:
            raise SourceError(f"{path}:{lineno}: expected {dim} values, found {len(vals)}")
        if not all(0.0 <= v <= 1.0 for v in vals):
            raise SourceError(f"{path}:{lineno}: values must lie in [0, 1]")
        rows.append(vals)
    if not rows:
        raise SourceError(f"dataset {path} has no data rows")
    data = np.array(rows, dtype=float)
    data.setflags(write=False)
    return data


def sample(spec: SourceSpec, count: int, stream_id: int | Sequence[int] = 0) -> np.ndarray:
    """``count`` i.i.d. points, shape ``(count, dim)``.

    A fixed dataset is treated as its empirical distribution and resampled
    with replacement.
    """
    if count < 1:
        raise SourceError(f"count must be >= 1, got {count}")
    rng = rng_for(spec.seed, stream_id)
    if spec.kind == "uniform_cube":
        return rng.random((count, spec.dim))
    if spec.kind == "independent_beta":
        return rng.beta(spec.alpha, spec.beta, size=(count, spec.dim))
    data = _load_dataset(str(spec.path), spec.dim)
    return data[rng.integers(0, len(data), size=count)]
