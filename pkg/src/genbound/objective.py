"""Regularized neural-net-distance objectives, population and empirical."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classes import ContractError, Network
from .dist import SourceSpec, sample

# stream-key namespace for Monte-Carlo expectations
MC_STREAM = 7
ROLE_X, ROLE_Z = 0, 1


@dataclass(frozen=True)
class Phi:
    kind: str = "identity"
    floor: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("identity", "guarded_log"):
            raise ContractError(f"unknown measuring function {self.kind!r}")
        if self.kind == "guarded_log" and not self.floor > 0:
            raise ContractError(f"guarded_log floor must be positive, got {self.floor}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        return np.log(np.maximum(x, self.floor))


@dataclass(frozen=True)
class ObjectiveConfig:
    lam: float = 0.0
    phi: Phi = field(default_factory=Phi)
    mc_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ContractError(f"lambda must be >= 0, got {self.lam}")
        if self.mc_samples < 1:
            raise ContractError(f"mc_samples must be >= 1, got {self.mc_samples}")


def mc_draws(spec: SourceSpec, cfg: ObjectiveConfig, role: int) -> np.ndarray:
    """The Monte-Carlo sample used for the ``role`` expectation under ``cfg``."""
    return sample(spec, cfg.mc_samples, (MC_STREAM, cfg.seed, role))


def _check_pair(D: Network, G: Network):
    if D.output_dim != 1:
        raise ContractError(f"discriminator must be scalar, has {D.output_dim} outputs")
    if G.output_dim != D.input_dim:
        raise ContractError(f"generator emits {G.output_dim} coordinates, discriminator expects {D.input_dim}")


def _nonempty(batch, name):
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if batch.shape[0] == 0 or batch.size == 0:
        raise ContractError(f"{name} is empty")
    return batch


def _terms(D: Network, G: Network, X, Z):
    """Per-sample pieces: D(x_i), D(G(z_j)), mean_k G_k(z_j)."""
    GZ = G(Z)
    return D.scalar(X), D.scalar(GZ), GZ


def inner_value_empirical_full(D: Network, G: Network, lam: float, x_batch, z_batch) -> float:
    """``mean D(x) - mean D(G(z)) - lam * mean(G(z))``, each sum over its own batch."""
    _check_pair(D, G)
    X = _nonempty(x_batch, "x_batch")
    Z = _nonempty(z_batch, "z_batch")
    dx, dgz, gz = _terms(D, G, X, Z)
    return float(dx.mean() - dgz.mean() - lam * gz.mean(axis=1).mean())


def inner_value_empirical_disc(D: Network, G: Network, cfg: ObjectiveConfig, x_batch, pz: SourceSpec) -> float:
    """Empirical real-data term, Monte-Carlo generator terms."""
    _check_pair(D, G)
    X = _nonempty(x_batch, "x_batch")
    return inner_value_empirical_full(D, G, cfg.lam, X, mc_draws(pz, cfg, ROLE_Z))


def inner_value_population(D: Network, G: Network, cfg: ObjectiveConfig, px: SourceSpec, pz: SourceSpec) -> float:
    _check_pair(D, G)
    X = mc_draws(px, cfg, ROLE_X)
    Z = mc_draws(pz, cfg, ROLE_Z)
    dx, dgz, gz = _terms(D, G, X, Z)
    phi = cfg.phi
    return float(phi(dx).mean() - phi(dgz).mean() - cfg.lam * gz.mean(axis=1).mean())


def phi_variant_value(
    D: Network, G: Network, cfg: ObjectiveConfig, px: SourceSpec, pz: SourceSpec, variant: str
) -> float:
    """Evaluate one of the three equivalent forms of the objective.

    ``eq5``: E phi(D(x)) + E phi(1 - D(G(z))) - lam E phi(G(z))
    ``eq6``: eq5 - 2 phi(1/2)
    ``eq7``: E D(x) - E D(G(z)) - lam E G(z)   (phi = identity)

    All three share the same Monte-Carlo draws.
    """
    _check_pair(D, G)
    X = mc_draws(px, cfg, ROLE_X)
    Z = mc_draws(pz, cfg, ROLE_Z)
    dx, dgz, gz = _terms(D, G, X, Z)
    phi, lam = cfg.phi, cfg.lam
    if variant == "eq7":
        return float(dx.mean() - dgz.mean() - lam * gz.mean(axis=1).mean())
    eq5 = float(phi(dx).mean() + phi(1.0 - dgz).mean() - lam * phi(gz).mean(axis=1).mean())
    if variant == "eq5":
        return eq5
    if variant == "eq6":
        return eq5 - 2.0 * float(phi(0.5))
    raise ContractError(f"unknown variant {variant!r}; expected eq5, eq6 or eq7")


def generator_term(G: Network, z_batch) -> float:
    """``mean_j mean_k G_k(z_j)``, the slope of the objective in lambda (up to sign)."""
    return float(G(_nonempty(z_batch, "z_batch")).mean(axis=1).mean())

