"""Projected-gradient maximization, alternating minimax training and gap measurement."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classes import (
    ClassSpec,
    ContractError,
    Network,
    TwoLayerParams,
    activate,
    activate_deriv,
    grad_batch,
    grad_input,
    project_l1_rows,
    project_params,
    random_feasible,
)
from .dist import SourceSpec, default_px, default_pz, rng_for, sample
from .objective import ROLE_Z, ObjectiveConfig, inner_value_empirical_full, mc_draws

log = logging.getLogger(__name__)

# stream-key namespaces
INIT_STREAM = 11
TRAIN_STREAM = 13
HOLDOUT_STREAM = 17


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptConfig:
    step_size: float = 0.2
    steps: int = 100
    restarts: int = 4
    inner_disc_steps: int = 2
    seed: int = 0
    init_scale: float = 1.0
    # assert class feasibility after every projection
    debug: bool = False

    def __post_init__(self):
        if not self.step_size > 0:
            raise ContractError(f"step_size must be positive, got {self.step_size}")
        if self.steps < 1 or self.restarts < 1 or self.inner_disc_steps < 1:
            raise ContractError(f"steps, restarts and inner_disc_steps must be >= 1: {self}")
        if not 0 < self.init_scale <= 1:
            raise ContractError(f"init_scale must lie in (0, 1], got {self.init_scale}")


@dataclass
class AscentResult:
    heads: list[TwoLayerParams]
    value: float
    trace: list[tuple[int, float]]


Heads = list[TwoLayerParams]
ValueAndGrad = Callable[[Heads], tuple[float, Heads]]


def _step(h: TwoLayerParams, g: TwoLayerParams, eta: float) -> TwoLayerParams:
    return TwoLayerParams(
        h.first_weights + eta * g.first_weights,
        h.first_bias + eta * g.first_bias,
        h.second_weights + eta * g.second_weights,
        h.second_bias + eta * g.second_bias,
        h.budget_V,
    )


def _check_finite(value: float, grads: Heads, step: int, label: str):
    if not np.isfinite(value) or not all(np.all(np.isfinite(g.flat())) for g in grads):
        raise OptimizationError(f"{label}: non-finite value or gradient at step {step}")


def _project_all(heads: Heads, debug: bool, label: str) -> Heads:
    out = [project_params(h) for h in heads]
    if debug and not all(h.is_feasible() for h in out):
        raise OptimizationError(f"{label}: infeasible iterate after projection")
    return out


def projected_ascent(
    value_and_grad: ValueAndGrad,
    heads: Heads,
    step_size: float,
    steps: int,
    debug: bool = False,
    label: str = "ascent",
) -> AscentResult:
    """Monotone projected gradient ascent.

    A step that lowers the value is rejected and the step size halved; an
    accepted step lets the step size grow back towards ``step_size``.
    """
    heads = _project_all(heads, debug, label)
    val, grads = value_and_grad(heads)
    _check_finite(val, grads, 0, label)
    trace = [(0, val)]
    eta = step_size
    for k in range(1, steps + 1):
        cand = _project_all([_step(h, g, eta) for h, g in zip(heads, grads)], debug, label)
        cval, cgrads = value_and_grad(cand)
        _check_finite(cval, cgrads, k, label)
        if cval >= val:
            heads, val, grads = cand, cval, cgrads
            eta = min(1.5 * eta, step_size)
        else:
            eta *= 0.5
        trace.append((k, val))
    return AscentResult(heads, val, trace)


def linear_value_and_grad(spec: ClassSpec, points, coeffs) -> ValueAndGrad:
    """``f -> sum_i coeffs[i] f(points[i])`` for a single-head member of ``spec``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = np.asarray(coeffs, dtype=float)
    act = spec.activation

    def fn(heads):
        (p,) = heads
        g = grad_batch(p, act, points, coeffs)
        # the value falls out of the second-layer gradient: sum_i c_i h(x_i) . w + w0 * sum c
        val = float(g.second_weights @ p.second_weights + g.second_bias * p.second_bias)
        return val, [g]

    return fn


# batched ascent: B independent problems sharing the points, one coefficient row each


def _stack(heads: Heads):
    return (
        np.stack([h.first_weights for h in heads]),
        np.stack([h.first_bias for h in heads]),
        np.stack([h.second_weights for h in heads]),
        np.array([h.second_bias for h in heads]),
    )


def _batch_project(P, V: float):
    W1, b1, w2, b2 = P
    if V == 0:
        return tuple(np.zeros_like(a) for a in P)
    B, w, d = W1.shape
    U = project_l1_rows(np.concatenate([b1[:, :, None], W1], axis=2).reshape(B * w, d + 1), V).reshape(B, w, d + 1)
    return U[:, :, 1:], U[:, :, 0], np.clip(w2, -V, V), np.clip(b2, -V, V)


def _batch_value_grad(act, X, C, P):
    W1, b1, w2, b2 = P
    pre = np.einsum("bud,nd->bun", W1, X) + b1[:, :, None]
    h = activate(act, pre)
    gw2 = np.einsum("bn,bun->bu", C, h)
    gb2 = C.sum(axis=1)
    val = np.einsum("bu,bu->b", gw2, w2) + gb2 * b2
    delta = C[:, None, :] * activate_deriv(act, pre) * w2[:, :, None]
    gW1 = np.einsum("bun,nd->bud", delta, X)
    gb1 = delta.sum(axis=2)
    return val, (gW1, gb1, gw2, gb2)


def batched_linear_ascent(
    spec: ClassSpec, points, coeff_rows, inits: Heads, step_size: float, steps: int, debug: bool = False
) -> tuple[Heads, np.ndarray, np.ndarray]:
    """Row-wise :func:`projected_ascent` of ``sum_i C[b, i] f_b(points[i])``.

    Returns final members, final values ``(B,)`` and the trace ``(steps + 1, B)``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    C = np.atleast_2d(np.asarray(coeff_rows, dtype=float))
    if X.shape[1] != spec.input_dim:
        raise ContractError(f"points have dimension {X.shape[1]}, class expects {spec.input_dim}")
    V, act = spec.budget_V, spec.activation
    P = _batch_project(_stack(inits), V)
    val, grad = _batch_value_grad(act, X, C, P)
    eta = np.full(len(C), float(step_size))
    trace = np.empty((steps + 1, len(C)))
    trace[0] = val
    for k in range(1, steps + 1):
        if not (np.all(np.isfinite(val)) and all(np.all(np.isfinite(g)) for g in grad)):
            raise OptimizationError(f"batched ascent: non-finite value or gradient at step {k - 1}")
        e = [eta[:, None, None], eta[:, None], eta[:, None], eta]
        cand = _batch_project(tuple(p + s * g for p, s, g in zip(P, e, grad)), V)
        cval, cgrad = _batch_value_grad(act, X, C, cand)
        ok = cval >= val
        sel = [ok[:, None, None], ok[:, None], ok[:, None], ok]
        P = tuple(np.where(s, c, p) for s, c, p in zip(sel, cand, P))
        grad = tuple(np.where(s, c, g) for s, c, g in zip(sel, cgrad, grad))
        val = np.where(ok, cval, val)
        eta = np.where(ok, np.minimum(1.5 * eta, step_size), 0.5 * eta)
        trace[k] = val
    heads = [TwoLayerParams(P[0][b], P[1][b], P[2][b], P[3][b], V) for b in range(len(C))]
    if debug and not all(h.is_feasible() for h in heads):
        raise OptimizationError("batched ascent: infeasible final iterate")
    return heads, val, trace


def restart_inits(spec: ClassSpec, cfg: OptConfig, stream: Sequence[int]) -> Heads:
    """Initial members of every restart; restart ``r`` reads stream ``(INIT_STREAM, *stream, r)``."""
    return [random_feasible(spec, rng_for(cfg.seed, (INIT_STREAM, *stream, r)), cfg.init_scale) for r in range(cfg.restarts)]


def maximize_linear_many(spec: ClassSpec, points, coeff_rows, cfg: OptConfig, streams: Sequence[Sequence[int]]):
    """Best-of-restarts sup for each coefficient row; returns (best members, best values, all values ``(T, R)``)."""
    coeff_rows = np.atleast_2d(np.asarray(coeff_rows, dtype=float))
    T, R = len(coeff_rows), cfg.restarts
    inits = [h for st in streams for h in restart_inits(spec, cfg, st)]
    heads, vals, _ = batched_linear_ascent(spec, points, np.repeat(coeff_rows, R, axis=0), inits, cfg.step_size, cfg.steps, cfg.debug)
    vals = vals.reshape(T, R)
    # first maximal restart wins ties
    idx = vals.argmax(axis=1)
    best = [heads[t * R + idx[t]] for t in range(T)]
    return best, vals.max(axis=1), vals


def maximize_linear(
    spec: ClassSpec, points, coeffs, cfg: OptConfig, stream: Sequence[int] = ()
) -> tuple[AscentResult, list[float]]:
    """Best-of-restarts sup of ``sum_i coeffs[i] f(points[i])`` over the class.

    Restart ``r`` draws its initial point from stream ``(INIT_STREAM, *stream, r)``
    so a run with more restarts extends, never replaces, a run with fewer.
    """
    inits = restart_inits(spec, cfg, stream)
    R = len(inits)
    C = np.repeat(np.atleast_2d(np.asarray(coeffs, dtype=float)), R, axis=0)
    heads, vals, trace = batched_linear_ascent(spec, points, C, inits, cfg.step_size, cfg.steps, cfg.debug)
    r = int(np.argmax(vals))
    return AscentResult([heads[r]], float(vals[r]), list(enumerate(trace[:, r].tolist()))), vals.tolist()


def _disc_points(fixed_G: Network | None, x_batch, z_batch):
    X = np.atleast_2d(np.asarray(x_batch, dtype=float))
    Z = np.atleast_2d(np.asarray(z_batch, dtype=float))
    if X.shape[0] == 0 or Z.shape[0] == 0:
        raise ContractError("empty batch")
    Y = Z if fixed_G is None else fixed_G(Z)
    n, m = len(X), len(Y)
    coeffs = np.concatenate([np.full(n, 1.0 / n), np.full(m, -1.0 / m)])
    return np.vstack([X, Y]), coeffs, Y


def maximize_disc(
    class_spec: ClassSpec,
    fixed_G: Network | None,
    x_batch,
    z_source,
    cfg: OptConfig,
    obj_cfg: ObjectiveConfig,
) -> tuple[TwoLayerParams, float]:
    """Maximize ``mean D(x) - mean D(G(z)) - lam * mean G(z)`` over the discriminator class.

    ``z_source`` is either a noise batch or a ``SourceSpec`` (then ``obj_cfg.mc_samples``
    Monte-Carlo draws are used). With ``fixed_G=None`` the noise batch is taken
    to be the generated points themselves and the regularizer is dropped.
    """
    if class_spec.output_dim != 1:
        raise ContractError("discriminator class must be scalar")
    Z = mc_draws(z_source, obj_cfg, ROLE_Z) if isinstance(z_source, SourceSpec) else z_source
    pts, coeffs, Y = _disc_points(fixed_G, x_batch, Z)
    reg = 0.0 if fixed_G is None else obj_cfg.lam * float(Y.mean(axis=1).mean())
    best, _ = maximize_linear(class_spec, pts, coeffs, cfg, stream=(1,))
    return best.heads[0], best.value - reg


@dataclass
class TrainResult:
    d_hat: TwoLayerParams
    g_hat: list[TwoLayerParams]
    value: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    # value of the trained discriminator before the final best-of-restarts stage
    trained_disc_value: float = float("nan")

    def networks(self, d_spec: ClassSpec, g_spec: ClassSpec) -> tuple[Network, Network]:
        return Network([self.d_hat], d_spec.activation), Network(self.g_hat, g_spec.activation)


def _generator_grad(D: TwoLayerParams, d_act, G: Heads, g_act, Z, lam: float) -> tuple[Heads, np.ndarray]:
    """Gradient of ``-mean D(G(z)) - lam * mean G(z)`` with respect to every generator head."""
    m, k = len(Z), len(G)
    GZ = np.stack([Network([h], g_act).scalar(Z) for h in G], axis=1)
    dD = grad_input(D, d_act, GZ)  # (m, k)
    coeff = -dD / m - lam / (m * k)
    return [grad_batch(h, g_act, Z, coeff[:, j]) for j, h in enumerate(G)], GZ


def minimax_train(
    d_spec: ClassSpec,
    g_spec: ClassSpec,
    x_batch,
    z_batch,
    lam: float,
    cfg: OptConfig,
) -> TrainResult:
    """Alternating projected ascent on D / descent on G, then a best-of-restarts max stage."""
    if g_spec.output_dim != d_spec.input_dim:
        raise ContractError(f"generator emits {g_spec.output_dim} coordinates, discriminator expects {d_spec.input_dim}")
    X = np.atleast_2d(np.asarray(x_batch, dtype=float))
    Z = np.atleast_2d(np.asarray(z_batch, dtype=float))
    if X.shape[1] != d_spec.input_dim or Z.shape[1] != g_spec.input_dim:
        raise ContractError(f"batch dimensions {X.shape}, {Z.shape} do not match the class specs")
    head_spec = ClassSpec(g_spec.input_dim, g_spec.width, g_spec.activation, g_spec.budget_V, 1)
    rng = rng_for(cfg.seed, (INIT_STREAM, 0))
    D = random_feasible(d_spec, rng, cfg.init_scale)
    G = [random_feasible(head_spec, rng, cfg.init_scale) for _ in range(g_spec.output_dim)]
    d_act, g_act = d_spec.activation, g_spec.activation

    trace = []
    for step in range(1, cfg.steps + 1):
        gen = Network(G, g_act)
        pts, coeffs, _ = _disc_points(gen, X, Z)
        res = projected_ascent(
            linear_value_and_grad(d_spec, pts, coeffs), [D], cfg.step_size, cfg.inner_disc_steps, cfg.debug, f"disc step {step}"
        )
        D = res.heads[0]
        grads, _ = _generator_grad(D, d_act, G, g_act, Z, lam)
        # descent on the generator
        G = _project_all([_step(h, g, -cfg.step_size) for h, g in zip(G, grads)], cfg.debug, f"gen step {step}")
        value = inner_value_empirical_full(Network([D], d_act), Network(G, g_act), lam, X, Z)
        _check_finite(value, grads, step, "generator step")
        trace.append((step, value))

    gen = Network(G, g_act)
    trained_value = inner_value_empirical_full(Network([D], d_act), gen, lam, X, Z)
    d_best, v_best = maximize_disc(d_spec, gen, X, Z, cfg, ObjectiveConfig(lam=lam))
    if trained_value > v_best:
        d_best = D
    d_hat = d_best
    value = inner_value_empirical_full(Network([d_hat], d_act), gen, lam, X, Z)
    return TrainResult(d_hat, G, value, trace, trained_value)


# ---------------------------------------------------------------------------
# generalization gap


@dataclass
class GapRecord:
    n: int
    m: int
    lam: float
    V: float
    value_empirical: float
    value_population: float
    gap: float
    bound_verbatim: float
    bound_conservative: float
    seed: int
    mode: str = "er1"
    d_x: int = 1
    d_z: int = 1
    rademacher_D: float = 0.0
    rademacher_DG: float = 0.0
    rademacher_G: float = 0.0
    delta: float = 0.025


@dataclass(frozen=True)
class ComplexityConfig:
    """Settings for the Rademacher estimates fed into the bound."""

    tau_draws: int = 8
    restarts: int = 2
    steps: int = 60
    step_size: float = 0.2


def training_batches(px: SourceSpec, pz: SourceSpec, n: int, m: int, seed: int):
    return sample(px, n, (TRAIN_STREAM, seed, 0)), sample(pz, m, (TRAIN_STREAM, seed, 1))


def measure_gap(
    d_spec: ClassSpec,
    g_spec: ClassSpec,
    n: int,
    m: int,
    lam: float,
    cfg: OptConfig,
    obj_cfg: ObjectiveConfig,
    holdout: int,
    px: SourceSpec | None = None,
    pz: SourceSpec | None = None,
    mode: str = "er1",
    delta: float = 0.025,
    complexity: ComplexityConfig | None = ComplexityConfig(),
    holdout_keys: tuple[Sequence[int], Sequence[int]] | None = None,
    min_holdout: int = 10_000,
) -> GapRecord:
    """Train on fresh samples and compare the empirical objective with its population value.

    ``er1``: the trained pair is re-evaluated on holdout draws.
    ``er2``: the generator is frozen at the trained one and the discriminator is
    re-maximized on the empirical and on the holdout objective.
    ``holdout_keys`` overrides the stream keys of the holdout draws.
    """
    from .bounds import theorem1_disc, theorem1_full
    from .rademacher import empirical_rademacher, empirical_rademacher_composition

    if holdout < min_holdout:
        raise ContractError(f"holdout must be >= {min_holdout}, got {holdout}")
    if mode not in ("er1", "er2"):
        raise ContractError(f"unknown gap mode {mode!r}")
    px = px or default_px(d_spec.input_dim)
    pz = pz or default_pz(g_spec.input_dim)
    if px.dim != d_spec.input_dim or pz.dim != g_spec.input_dim:
        raise ContractError("source dimensions do not match the class input dimensions")

    X, Z = training_batches(px, pz, n, m, cfg.seed)
    trained = minimax_train(d_spec, g_spec, X, Z, lam, cfg)
    D, G = trained.networks(d_spec, g_spec)

    hx_key, hz_key = holdout_keys or ((HOLDOUT_STREAM, obj_cfg.seed, 0), (HOLDOUT_STREAM, obj_cfg.seed, 1))
    Xh = sample(px, holdout, hx_key)
    Zh = sample(pz, holdout, hz_key)
    if mode == "er1":
        value_emp = trained.value
        value_pop = inner_value_empirical_full(D, G, lam, Xh, Zh)
    else:
        oc = ObjectiveConfig(lam=lam)
        _, value_emp = maximize_disc(d_spec, G, X, Zh, cfg, oc)
        _, value_pop = maximize_disc(d_spec, G, Xh, Zh, cfg, oc)

    rD = rDG = rG = 0.0
    if complexity is not None:
        ocfg = OptConfig(
            step_size=complexity.step_size, steps=complexity.steps, restarts=complexity.restarts, seed=cfg.seed
        )
        head_spec = ClassSpec(g_spec.input_dim, g_spec.width, g_spec.activation, g_spec.budget_V, 1)
        rD = empirical_rademacher(d_spec, X, complexity.tau_draws, complexity.restarts, ocfg).mean
        if mode == "er1":
            rDG = empirical_rademacher_composition(d_spec, g_spec, Z, complexity.tau_draws, complexity.restarts, ocfg).mean
            rG = empirical_rademacher(head_spec, Z, complexity.tau_draws, complexity.restarts, ocfg).mean

    Qx, Qz = d_spec.envelope, g_spec.envelope
    if mode == "er1":
        verb = theorem1_full(rD, rDG, rG, Qx, Qz, lam, n, m, delta, "verbatim").value
        cons = theorem1_full(rD, rDG, rG, Qx, Qz, lam, n, m, delta, "conservative").value
    else:
        verb = cons = theorem1_disc(rD, Qx, n, delta).value

    return GapRecord(
        n=n,
        m=m,
        lam=lam,
        V=d_spec.budget_V,
        value_empirical=value_emp,
        value_population=value_pop,
        gap=value_emp - value_pop,
        bound_verbatim=verb,
        bound_conservative=cons,
        seed=cfg.seed,
        mode=mode,
        d_x=d_spec.input_dim,
        d_z=g_spec.input_dim,
        rademacher_D=rD,
        rademacher_DG=rDG,
        rademacher_G=rG,
        delta=delta,
    )
