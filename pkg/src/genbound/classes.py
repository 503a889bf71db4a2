"""Constrained two-layer function classes.

A unit computes ``s(v . x + v0)`` with ``|v0| + sum_i |v_i| <= V``; a network is
``sum_u w_u * unit_u(x) + w0`` with ``|w_u| <= V`` and ``|w0| <= V``.
Generators are stacks of independent scalar heads, one per output coordinate.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

# tolerance used when checking the l1 / box budgets
FEAS_TOL = 1e-9


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


class Activation(str, enum.Enum):
    CLAMP01 = "clamp01"
    LOGISTIC = "logistic"


def activate(kind: Activation | str, a):
    kind = Activation(kind)
    a = np.asarray(a, dtype=float)
    if kind is Activation.CLAMP01:
        return np.clip(a, 0.0, 1.0)
    # split on sign to avoid overflow in exp
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def activate_deriv(kind: Activation | str, a):
    """Derivative of the activation; right-derivative at the clamp kinks."""
    kind = Activation(kind)
    a = np.asarray(a, dtype=float)
    if kind is Activation.CLAMP01:
        return ((a >= 0.0) & (a < 1.0)).astype(float)
    s = activate(kind, a)
    return s * (1.0 - s)


@dataclass
class TwoLayerParams:
    first_weights: np.ndarray  # (width, input_dim)
    first_bias: np.ndarray  # (width,)
    second_weights: np.ndarray  # (width,)
    second_bias: float
    budget_V: float

    def __post_init__(self):
        self.first_weights = np.atleast_2d(np.asarray(self.first_weights, dtype=float))
        self.first_bias = np.atleast_1d(np.asarray(self.first_bias, dtype=float))
        self.second_weights = np.atleast_1d(np.asarray(self.second_weights, dtype=float))
        self.second_bias = float(self.second_bias)
        self.budget_V = float(self.budget_V)
        w = self.first_weights.shape[0]
        if self.first_bias.shape != (w,) or self.second_weights.shape != (w,):
            raise ContractError(
                f"inconsistent widths: first_weights {self.first_weights.shape}, "
                f"first_bias {self.first_bias.shape}, second_weights {self.second_weights.shape}"
            )

    @property
    def width(self) -> int:
        return self.first_weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.first_weights.shape[1]

    def copy(self) -> TwoLayerParams:
        return TwoLayerParams(
            self.first_weights.copy(),
            self.first_bias.copy(),
            self.second_weights.copy(),
            self.second_bias,
            self.budget_V,
        )

    def negated(self) -> TwoLayerParams:
        return TwoLayerParams(
            self.first_weights.copy(),
            self.first_bias.copy(),
            -self.second_weights,
            -self.second_bias,
            self.budget_V,
        )

    def is_feasible(self, tol: float = FEAS_TOL) -> bool:
        V = self.budget_V
        l1 = np.abs(self.first_bias) + np.abs(self.first_weights).sum(axis=1)
        return bool(
            np.all(l1 <= V + tol)
            and np.all(np.abs(self.second_weights) <= V + tol)
            and abs(self.second_bias) <= V + tol
        )

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [self.first_weights.ravel(), self.first_bias, self.second_weights, [self.second_bias]]
        )

    @classmethod
    def from_flat(cls, vec, width: int, input_dim: int, budget_V: float) -> TwoLayerParams:
        vec = np.asarray(vec, dtype=float)
        k = width * input_dim
        return cls(
            vec[:k].reshape(width, input_dim),
            vec[k : k + width],
            vec[k + width : k + 2 * width],
            vec[k + 2 * width],
            budget_V,
        )

    @classmethod
    def zeros(cls, width: int, input_dim: int, budget_V: float) -> TwoLayerParams:
        return cls(np.zeros((width, input_dim)), np.zeros(width), np.zeros(width), 0.0, budget_V)


@dataclass(frozen=True)
class ClassSpec:
    input_dim: int
    width: int
    activation: Activation = Activation.CLAMP01
    budget_V: float = 1.0
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.input_dim < 1 or self.width < 1 or self.output_dim < 1:
            raise ContractError(f"dimensions must be positive: {self}")
        # V = 0 is the degenerate zero-only class
        if self.budget_V < 0:
            raise ContractError(f"budget_V must be >= 0, got {self.budget_V}")

    @property
    def envelope(self) -> float:
        """Sup-norm envelope V * (width + 1) of every member output."""
        return self.budget_V * (self.width + 1)


@dataclass
class Network:
    """A concrete member of a class: one head per output coordinate."""

    heads: list[TwoLayerParams]
    activation: Activation = Activation.CLAMP01

    def __post_init__(self):
        self.activation = Activation(self.activation)
        if isinstance(self.heads, TwoLayerParams):
            self.heads = [self.heads]
        self.heads = list(self.heads)

    @property
    def output_dim(self) -> int:
        return len(self.heads)

    @property
    def input_dim(self) -> int:
        return self.heads[0].input_dim

    def __call__(self, X) -> np.ndarray:
        """Evaluate on a batch ``(N, input_dim)``; returns ``(N, output_dim)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([eval_network(h, self.activation, X) for h in self.heads], axis=1)

    def scalar(self, X) -> np.ndarray:
        if self.output_dim != 1:
            raise ContractError(f"scalar() needs output_dim 1, have {self.output_dim}")
        return eval_network(self.heads[0], self.activation, np.atleast_2d(X))

    def copy(self) -> Network:
        return Network([h.copy() for h in self.heads], self.activation)

    def is_feasible(self) -> bool:
        return all(h.is_feasible() for h in self.heads)

    @classmethod
    def zeros(cls, spec: ClassSpec) -> Network:
        return cls(
            [TwoLayerParams.zeros(spec.width, spec.input_dim, spec.budget_V) for _ in range(spec.output_dim)],
            spec.activation,
        )


def _check_dim(params: TwoLayerParams, x: np.ndarray):
    if x.shape[-1] != params.input_dim:
        raise ContractError(f"input has dimension {x.shape[-1]}, network expects {params.input_dim}")


def eval_unit(weights, bias: float, activation: Activation | str, x) -> float:
    weights = np.asarray(weights, dtype=float)
    x = np.asarray(x, dtype=float)
    if weights.shape != x.shape:
        raise ContractError(f"weights {weights.shape} and x {x.shape} differ in shape")
    return float(activate(activation, np.dot(weights, x) + bias))


def hidden(params: TwoLayerParams, activation: Activation | str, X) -> tuple[np.ndarray, np.ndarray]:
    """Pre-activations and unit outputs, each ``(N, width)``."""
    X = np.asarray(X, dtype=float)
    _check_dim(params, X)
    pre = X @ params.first_weights.T + params.first_bias
    return pre, activate(activation, pre)


def eval_network(params: TwoLayerParams, activation: Activation | str, x):
    """Scalar network output; ``x`` may be a single point or an ``(N, d)`` batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    _, h = hidden(params, activation, np.atleast_2d(x))
    out = h @ params.second_weights + params.second_bias
    return float(out[0]) if single else out


def grad_batch(params: TwoLayerParams, activation: Activation | str, X, coeffs) -> TwoLayerParams:
    """Gradient of ``sum_i coeffs[i] * f(X[i])`` with respect to every parameter."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    c = np.asarray(coeffs, dtype=float)
    pre, h = hidden(params, activation, X)
    g_second = c @ h
    g_bias2 = float(c.sum())
    delta = (c[:, None] * activate_deriv(activation, pre)) * params.second_weights  # (N, width)
    g_first = delta.T @ X
    g_bias1 = delta.sum(axis=0)
    return TwoLayerParams(g_first, g_bias1, g_second, g_bias2, params.budget_V)


def grad_params(params: TwoLayerParams, activation: Activation | str, x) -> TwoLayerParams:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ContractError("grad_params takes a single point; use grad_batch for batches")
    return grad_batch(params, activation, x[None, :], [1.0])


def grad_input(params: TwoLayerParams, activation: Activation | str, X) -> np.ndarray:
    """Gradient of the output with respect to the input, row per point ``(N, d)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    pre, _ = hidden(params, activation, X)
    return (activate_deriv(activation, pre) * params.second_weights) @ params.first_weights


def project_l1_ball(vec, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{u : ||u||_1 <= radius}`` by sort-and-threshold."""
    vec = np.asarray(vec, dtype=float)
    a = np.abs(vec)
    if a.sum() <= radius:
        return vec.copy()
    mu = np.sort(a)[::-1]
    cssv = np.cumsum(mu) - radius
    ind = np.arange(1, len(mu) + 1)
    rho = np.nonzero(mu - cssv / ind > 0)[0][-1]
    theta = cssv[rho] / (rho + 1)
    out = np.sign(vec) * np.maximum(a - theta, 0.0)
    # a - theta cancels when |vec| >> radius; pull rounding overshoot back inside
    s = np.abs(out).sum()
    if s > radius:
        out *= radius / s
    return out


def project_l1_rows(U, radius: float) -> np.ndarray:
    """Row-wise :func:`project_l1_ball` for a ``(R, p)`` array."""
    U = np.asarray(U, dtype=float)
    A = np.abs(U)
    inside = A.sum(axis=1) <= radius
    if inside.all():
        return U.copy()
    mu = -np.sort(-A, axis=1)
    css = np.cumsum(mu, axis=1) - radius
    ind = np.arange(1, U.shape[1] + 1)
    cond = mu - css / ind > 0
    rho = U.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(U)), rho] / (rho + 1)
    out = np.sign(U) * np.maximum(A - theta[:, None], 0.0)
    s = np.abs(out).sum(axis=1)
    over = s > radius
    out[over] *= (radius / s[over])[:, None]
    out[inside] = U[inside]
    return out


def project_first_layer(weights, bias: float, V: float) -> tuple[np.ndarray, float]:
    if V <= 0:
        raise ContractError(f"V must be positive, got {V}")
    weights = np.asarray(weights, dtype=float)
    u = project_l1_ball(np.concatenate([[bias], weights]), V)
    return u[1:], float(u[0])


def project_second_layer(weights, bias: float, V: float) -> tuple[np.ndarray, float]:
    if V <= 0:
        raise ContractError(f"V must be positive, got {V}")
    return np.clip(np.asarray(weights, dtype=float), -V, V), float(np.clip(bias, -V, V))


def project_params(params: TwoLayerParams) -> TwoLayerParams:
    """Project every unit and the second layer onto the class budget (V=0 gives the zero member)."""
    V = params.budget_V
    if V == 0:
        return TwoLayerParams.zeros(params.width, params.input_dim, 0.0)
    fw = np.empty_like(params.first_weights)
    fb = np.empty_like(params.first_bias)
    for u in range(params.width):
        fw[u], fb[u] = project_first_layer(params.first_weights[u], params.first_bias[u], V)
    sw, sb = project_second_layer(params.second_weights, params.second_bias, V)
    return TwoLayerParams(fw, fb, sw, sb, V)


def random_feasible(spec: ClassSpec, rng: np.random.Generator, init_scale: float = 1.0) -> TwoLayerParams:
    """Uniform draw in the scaled weight box, projected onto the budget."""
    V = spec.budget_V
    r = V * init_scale
    p = TwoLayerParams(
        rng.uniform(-r, r, size=(spec.width, spec.input_dim)),
        rng.uniform(-r, r, size=spec.width),
        rng.uniform(-r, r, size=spec.width),
        rng.uniform(-r, r),
        V,
    )
    return project_params(p)


# ---------------------------------------------------------------------------
# finite classes


@dataclass
class FiniteClass:
    """Members stored as stacked arrays; ``members`` materialises them on demand."""

    first_weights: np.ndarray  # (K, width, d)
    first_bias: np.ndarray  # (K, width)
    second_weights: np.ndarray  # (K, width)
    second_bias: np.ndarray  # (K,)
    budget_V: float
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def cardinality(self) -> int:
        return int(self.second_bias.shape[0])

    def __len__(self) -> int:
        return self.cardinality

    def member(self, k: int) -> TwoLayerParams:
        return TwoLayerParams(
            self.first_weights[k], self.first_bias[k], self.second_weights[k], self.second_bias[k], self.budget_V
        )

    @property
    def members(self) -> list[TwoLayerParams]:
        return [self.member(k) for k in range(self.cardinality)]

    def values(self, activation: Activation | str, X) -> np.ndarray:
        """Every member evaluated on every point, ``(K, N)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        pre = np.einsum("kud,nd->kun", self.first_weights, X) + self.first_bias[:, :, None]
        h = activate(activation, pre)
        return np.einsum("ku,kun->kn", self.second_weights, h) + self.second_bias[:, None]

    def index_of(self, params: TwoLayerParams, tol: float = 1e-12) -> int:
        """Position of a member with the given parameters, or -1."""
        hit = (
            np.all(np.abs(self.first_weights - params.first_weights) <= tol, axis=(1, 2))
            & np.all(np.abs(self.first_bias - params.first_bias) <= tol, axis=1)
            & np.all(np.abs(self.second_weights - params.second_weights) <= tol, axis=1)
            & (np.abs(self.second_bias - params.second_bias) <= tol)
        )
        idx = np.flatnonzero(hit)
        return int(idx[0]) if idx.size else -1


def symmetric_grid(V: float, grid_levels: int) -> np.ndarray:
    if grid_levels < 2:
        raise ContractError(f"grid_levels must be >= 2, got {grid_levels}")
    if grid_levels % 2 == 0:
        raise ContractError(f"grid_levels must be odd so the grid contains 0, got {grid_levels}")
    k = np.arange(grid_levels) - (grid_levels - 1) // 2
    return k * (V / ((grid_levels - 1) // 2))


def feasible_first_layer_tuples(V: float, input_dim: int, grid_levels: int) -> np.ndarray:
    """All (bias, weights) grid tuples inside the l1 ball, rows ``(F, 1 + d)`` in lexicographic order."""
    g = symmetric_grid(V, grid_levels)
    half = (grid_levels - 1) // 2
    # filter on the integer lattice to keep the test exact
    ks = np.array(list(itertools.product(range(-half, half + 1), repeat=input_dim + 1)), dtype=int)
    keep = np.abs(ks).sum(axis=1) <= half
    return g[ks[keep] + half]


def finite_class_cardinality(spec: ClassSpec, grid_levels: int) -> int:
    F = len(feasible_first_layer_tuples(spec.budget_V, spec.input_dim, grid_levels))
    return F**spec.width * grid_levels ** (spec.width + 1)


def enumerate_finite_class(spec: ClassSpec, grid_levels: int, cap: int = 10**6) -> FiniteClass:
    """Every grid member of the class, in a fixed lexicographic order."""
    if spec.output_dim != 1:
        raise ContractError("finite classes are scalar; enumerate one head class")
    if spec.budget_V == 0:
        w, d = spec.width, spec.input_dim
        return FiniteClass(np.zeros((1, w, d)), np.zeros((1, w)), np.zeros((1, w)), np.zeros(1), 0.0, np.zeros(1))
    first = feasible_first_layer_tuples(spec.budget_V, spec.input_dim, grid_levels)
    grid = symmetric_grid(spec.budget_V, grid_levels)
    card = len(first) ** spec.width * grid_levels ** (spec.width + 1)
    if card > cap:
        raise ContractError(f"finite class would have {card} members, above the cap of {cap}")
    w = spec.width
    unit_idx = np.array(list(itertools.product(range(len(first)), repeat=w)), dtype=int).reshape(-1, w)
    second_idx = np.array(list(itertools.product(range(grid_levels), repeat=w + 1)), dtype=int)
    # outer product: first-layer choice varies slowest
    ui = np.repeat(np.arange(len(unit_idx)), len(second_idx))
    si = np.tile(np.arange(len(second_idx)), len(unit_idx))
    chosen = first[unit_idx[ui]]  # (K, w, 1 + d)
    second = grid[second_idx[si]]  # (K, w + 1)
    return FiniteClass(
        first_weights=chosen[:, :, 1:],
        first_bias=chosen[:, :, 0],
        second_weights=second[:, :w],
        second_bias=second[:, w],
        budget_V=spec.budget_V,
        grid=grid,
    )

