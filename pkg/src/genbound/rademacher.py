"""Rademacher complexity: Monte-Carlo over signs, exact enumeration, and compositions.

Throughout, the complexity of a class F on a sample x_1..x_n is
``E_tau sup_{f in F} (2/n) sum_i tau_i f(x_i)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .classes import Activation, ClassSpec, ContractError, FiniteClass, Network, grad_batch, grad_input, random_feasible
from .dist import rng_for
from .optim import INIT_STREAM, OptConfig, maximize_linear_many, projected_ascent

TAU_STREAM = 23


@dataclass
class RademacherEstimate:
    mean: float
    std_error: float
    tau_draws: int
    restarts: int
    seed: int
    mode: str  # "monte_carlo" | "exact_enumeration"
    # per tau draw: best-of-restarts minus worst restart
    restart_spread: list[float] = field(default_factory=list)


def rademacher_signs(seed: int, draw: int, n: int) -> np.ndarray:
    return rng_for(seed, (TAU_STREAM, draw)).choice(np.array([-1.0, 1.0]), size=n)


def _summarize(sups: list[float], spreads: list[float], tau_draws, restarts, seed) -> RademacherEstimate:
    s = np.asarray(sups)
    se = float(s.std(ddof=1) / math.sqrt(len(s))) if len(s) > 1 else 0.0
    return RademacherEstimate(float(s.mean()), se, tau_draws, restarts, seed, "monte_carlo", spreads)


def _check_sample(sample, dim: int) -> np.ndarray:
    S = np.atleast_2d(np.asarray(sample, dtype=float))
    if S.shape[0] < 1:
        raise ContractError("sample must have at least one row")
    if S.shape[1] != dim:
        raise ContractError(f"sample has dimension {S.shape[1]}, class expects {dim}")
    return S


def empirical_rademacher(
    class_spec: ClassSpec, sample, tau_draws: int, restarts: int, opt_cfg: OptConfig
) -> RademacherEstimate:
    """Monte-Carlo estimate; each inner sup by best-of-restarts projected ascent."""
    S = _check_sample(sample, class_spec.input_dim)
    n = len(S)
    cfg = OptConfig(opt_cfg.step_size, opt_cfg.steps, restarts, 1, opt_cfg.seed, opt_cfg.init_scale, opt_cfg.debug)
    taus = np.stack([rademacher_signs(opt_cfg.seed, t, n) for t in range(tau_draws)])
    streams = [(TAU_STREAM, t) for t in range(tau_draws)]
    _, _, vals = maximize_linear_many(class_spec, S, 2.0 * taus / n, cfg, streams)
    # the class is closed under negating the second layer, so every visited f
    # also certifies -f: the sup is at least |value|
    vals = np.abs(vals)
    sups = vals.max(axis=1)
    spreads = (sups - vals.min(axis=1)).tolist()
    return _summarize(sups.tolist(), spreads, tau_draws, restarts, opt_cfg.seed)


def all_sign_vectors(n: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def exact_rademacher(
    finite_class: FiniteClass,
    activation: Activation | str,
    sample,
    max_n: int = 20,
    max_work: int = 10**6,
) -> RademacherEstimate:
    """Exact average over all 2^n sign vectors of the max over class members."""
    S = np.atleast_2d(np.asarray(sample, dtype=float))
    n = len(S)
    if n > max_n:
        raise ContractError(f"exact enumeration needs n <= {max_n}, got n={n} (2^{n} sign vectors)")
    work = finite_class.cardinality * 2**n
    if work > max_work:
        raise ContractError(
            f"exact enumeration would cost {work} member-sign evaluations "
            f"({finite_class.cardinality} members x 2^{n}), above the budget of {max_work}"
        )
    F = finite_class.values(activation, S)  # (K, n)
    T = all_sign_vectors(n)
    best = np.full(len(T), -np.inf)
    for lo in range(0, len(F), 4096):
        np.maximum(best, (T @ F[lo : lo + 4096].T).max(axis=1), out=best)
    return RademacherEstimate(float(best.mean() * 2.0 / n), 0.0, len(T), 0, 0, "exact_enumeration")


def empirical_rademacher_composition(
    d_spec: ClassSpec, g_spec: ClassSpec, z_sample, tau_draws: int, restarts: int, opt_cfg: OptConfig
) -> RademacherEstimate:
    """Monte-Carlo estimate for the composed class ``D o G`` by joint ascent on both networks."""
    if g_spec.output_dim != d_spec.input_dim:
        raise ContractError(f"generator emits {g_spec.output_dim} coordinates, discriminator expects {d_spec.input_dim}")
    Z = _check_sample(z_sample, g_spec.input_dim)
    m, k = len(Z), g_spec.output_dim
    head_spec = ClassSpec(g_spec.input_dim, g_spec.width, g_spec.activation, g_spec.budget_V, 1)
    d_act, g_act = d_spec.activation, g_spec.activation

    def value_and_grad_for(c):
        def fn(heads):
            D, G = heads[0], heads[1:]
            GZ = Network(G, g_act)(Z)
            gD = grad_batch(D, d_act, GZ, c)
            val = float(gD.second_weights @ D.second_weights + gD.second_bias * D.second_bias)
            coeff = c[:, None] * grad_input(D, d_act, GZ)
            return val, [gD] + [grad_batch(h, g_act, Z, coeff[:, j]) for j, h in enumerate(G)]

        return fn

    sups, spreads = [], []
    for t in range(tau_draws):
        tau = rademacher_signs(opt_cfg.seed, t, m)
        fn = value_and_grad_for(2.0 * tau / m)
        values = []
        for r in range(restarts):
            rng = rng_for(opt_cfg.seed, (INIT_STREAM, TAU_STREAM, 2, t, r))
            init = [random_feasible(d_spec, rng, opt_cfg.init_scale)]
            init += [random_feasible(head_spec, rng, opt_cfg.init_scale) for _ in range(k)]
            res = projected_ascent(fn, init, opt_cfg.step_size, opt_cfg.steps, opt_cfg.debug, f"composition restart {r}")
            values.append(abs(res.value))  # negating D keeps the pair feasible
        sups.append(max(values))
        spreads.append(max(values) - min(values))
    return _summarize(sups, spreads, tau_draws, restarts, opt_cfg.seed)
