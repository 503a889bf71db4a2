"""Closed-form generalization bounds, covering numbers and the Dudley entropy integral.

All logarithms are natural. Each assembled bound comes in two variants:
``verbatim`` follows the printed right-hand side, ``conservative`` adds every
deviation term with a positive sign.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize


class BoundDomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


VARIANTS = ("verbatim", "conservative")


@dataclass
class BoundReport:
    name: str
    value: float
    inputs: dict
    variant: str
    notes: list[str] = field(default_factory=list)


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise BoundDomainError(f"{k} must be positive, got {v}")


def massart_bound_disc(V: float, n: int, card: int) -> float:
    """``4 V^2 sqrt(2 ln card) / n``."""
    _positive(n=n)
    if card < 1:
        raise BoundDomainError(f"class cardinality must be >= 1, got {card}")
    return 4.0 * V**2 * math.sqrt(2.0 * math.log(card)) / n


def lipschitz_entropy_bound(V: float, n: int, C1: float = 1.0) -> float:
    """``C1 V^3 ln(2n + 2) / sqrt(n)``."""
    _positive(n=n, C1=C1)
    return C1 * V**3 * math.log(2 * n + 2) / math.sqrt(n)


def composition_bound(V: float, m: int, card_G: int) -> float:
    """``2 V^4 sqrt(2 ln |G|) / m`` (indexed by the noise sample size)."""
    _positive(m=m)
    if card_G < 1:
        raise BoundDomainError(f"class cardinality must be >= 1, got {card_G}")
    return 2.0 * V**4 * math.sqrt(2.0 * math.log(card_G)) / m


def covering_lipschitz(eps: float, V: float, n: int) -> float:
    """Log-covering bound ``50 V^6 ln(2n + 2) / eps^4`` for Lipschitz activations."""
    if not 0 < eps <= max(V, 1e-300):
        raise BoundDomainError(f"need 0 < eps <= V, got eps={eps}, V={V}")
    return 50.0 * V**6 * math.log(2 * n + 2) / eps**4


def covering_nondecreasing(eps: float, V: float, n: int, t: float | None = None) -> float:
    """Log-covering bound ``5 V^2 (n+3)/eps^2 ln(4 e t V / (eps (n+1)))``, clamped at 0."""
    if not 0 < eps <= 1:
        raise BoundDomainError(f"need 0 < eps <= 1, got {eps}")
    t = n + 1 if t is None else t
    if t < n + 1:
        raise BoundDomainError(f"need t >= n + 1, got t={t}, n={n}")
    arg = 4.0 * math.e * t * V / (eps * (n + 1))
    if arg <= 1.0:
        return 0.0
    return 5.0 * V**2 * (n + 3) / eps**2 * math.log(arg)


def _log_covering(kind: str, V: float, n: int, t: float | None):
    if kind == "lipschitz":
        # the formula is stated for eps <= V; covering numbers only shrink as eps grows
        return lambda e: covering_lipschitz(min(e, V), V, n)
    if kind == "nondecreasing":
        return lambda e: covering_nondecreasing(e, V, n, t)
    raise BoundDomainError(f"unknown covering kind {kind!r}")


def entropy_integral(kind: str, V: float, n: int, lower: float, t: float | None = None, rtol: float = 1e-6) -> float:
    """``int_lower^{1/2} sqrt(log N(eps)) d eps``."""
    if lower >= 0.5:
        return 0.0
    logN = _log_covering(kind, V, n, t)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(lambda e: math.sqrt(logN(e)), lower, 0.5, epsrel=rtol, epsabs=0.0, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"entropy integral over [{lower}, 0.5] ({kind}, V={V}, n={n}) failed: {exc}") from None
    if not math.isfinite(val) or err > max(rtol * abs(val), 1e-300) * 10:
        raise QuadratureError(f"entropy integral over [{lower}, 0.5] ({kind}, V={V}, n={n}): value {val}, error estimate {err}")
    return val


def dudley_objective(delta: float, kind: str, V: float, n: int, t: float | None = None) -> float:
    return 4.0 * delta + 12.0 / math.sqrt(n) * entropy_integral(kind, V, n, delta, t)


def dudley_bound(kind: str, V: float, n: int, t: float | None = None, delta_grid: int = 64) -> float:
    """``inf_{0 <= delta <= 1/2} [4 delta + 12/sqrt(n) int_delta^{1/2} sqrt(log N) d eps]``.

    Grid search over delta followed by a bounded scalar refinement
    (tolerance 1e-4) around the best grid point.
    """
    if delta_grid < 8:
        raise BoundDomainError(f"delta_grid must be >= 8, got {delta_grid}")
    _positive(n=n)
    if V == 0:
        # zero integrand: the infimum is 4 * 0
        return 0.0
    grid = np.linspace(0.5 / delta_grid, 0.5, delta_grid)
    vals = [dudley_objective(d, kind, V, n, t) for d in grid]
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best = vals[i]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda d: dudley_objective(d, kind, V, n, t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-4}
        )
        if res.success and res.fun < best:
            best = float(res.fun)
    return float(best)


def nondecreasing_closed_form(C: float, V: float, n: int) -> float:
    """``C V sqrt((n+3)/n ln((n+1)/n))``; the log argument is inverted so the value is real."""
    _positive(C=C, n=n)
    return C * V * math.sqrt((n + 3) / n * math.log1p(1.0 / n))


def concentration_term(Q: float, count: int, delta: float) -> float:
    """``2 Q sqrt(ln(1/delta) / (2 count))``."""
    if Q < 0:
        raise BoundDomainError(f"Q must be >= 0, got {Q}")
    _positive(count=count)
    if not 0 < delta < 1:
        raise BoundDomainError(f"delta must lie in (0, 1), got {delta}")
    return 2.0 * Q * math.sqrt(math.log(1.0 / delta) / (2.0 * count))


def _variant(variant: str):
    if variant not in VARIANTS:
        raise BoundDomainError(f"unknown variant {variant!r}")


def theorem1_full(Rn_D, Rmn_DG, Rm_G, Q_x, Q_z, lam, n, m, delta, variant="conservative") -> BoundReport:
    """Bound on the joint empirical-vs-population deviation.

    verbatim: 2R_n(D) + 2R_m(DoG) - 2R_m(G) + conc(Q_x, n) - (1+lam) conc(Q_z, m)
    conservative: the same with both minus signs replaced by plus.
    """
    _variant(variant)
    for name, r in (("Rn_D", Rn_D), ("Rmn_DG", Rmn_DG), ("Rm_G", Rm_G)):
        if r < 0:
            raise BoundDomainError(f"{name} must be >= 0, got {r}")
    sign = -1.0 if variant == "verbatim" else 1.0
    value = (
        2 * Rn_D
        + 2 * Rmn_DG
        + sign * 2 * Rm_G
        + concentration_term(Q_x, n, delta)
        + sign * (1 + lam) * concentration_term(Q_z, m, delta)
    )
    inputs = dict(Rn_D=Rn_D, Rmn_DG=Rmn_DG, Rm_G=Rm_G, Q_x=Q_x, Q_z=Q_z, lambda_=lam, n=n, m=m, delta=delta)
    return BoundReport("theorem1_full", value, inputs, variant)


def theorem1_disc(Rn_D, Q_x, n, delta) -> BoundReport:
    """``2 R_n(D) + conc(Q_x, n)``; identical in both variants."""
    if Rn_D < 0:
        raise BoundDomainError(f"Rn_D must be >= 0, got {Rn_D}")
    value = 2 * Rn_D + concentration_term(Q_x, n, delta)
    return BoundReport("theorem1_disc", value, dict(Rn_D=Rn_D, Q_x=Q_x, n=n, delta=delta), "verbatim")


COROLLARIES = ("lip_full", "lip_entropy", "lip_disc", "lip_disc_entropy", "nd_disc_3_4", "nd_full_3_5")


def corollary_bounds(which: str, inputs: dict, variant: str = "verbatim") -> BoundReport:
    """Assemble a corollary's right-hand side from the primitive terms.

    ``inputs`` keys (as needed): V, n, m, card_D, card_G, Q_x, Q_z, delta,
    lambda_, C, C1, and ``lambda_sign`` (+1 for a (1+lam) multiplier, -1 for
    (1-lam); only ``lip_entropy`` reads it).
    """
    _variant(variant)
    if which not in COROLLARIES:
        raise BoundDomainError(f"unknown corollary {which!r}; expected one of {COROLLARIES}")
    g = dict(C=1.0, C1=1.0, lambda_=0.0, lambda_sign=1.0, Q_x=0.0, Q_z=0.0)
    g.update(inputs)
    V, n, delta = g["V"], g["n"], g["delta"]
    m = g.get("m", n)
    lam = g["lambda_"]
    cx = concentration_term(g["Q_x"], n, delta)
    cz = concentration_term(g["Q_z"], m, delta)
    notes: list[str] = []
    cons = variant == "conservative"

    if which == "lip_full":
        if cons:
            value = theorem1_full(
                massart_bound_disc(V, n, g["card_D"]),
                composition_bound(V, m, g["card_G"]),
                massart_bound_disc(V, m, g["card_G"]),
                g["Q_x"], g["Q_z"], lam, n, m, delta, "conservative",
            ).value
        else:
            value = (
                massart_bound_disc(V, n, g["card_D"])
                + 2 * composition_bound(V, n, g["card_G"])
                + cx
                + cz
            )
    elif which == "lip_entropy":
        mult = 1 + g["lambda_sign"] * lam
        if cons:
            e_n = lipschitz_entropy_bound(V, n, g["C1"])
            e_m = lipschitz_entropy_bound(V, m, g["C1"])
            value = 2 * e_n + 2 * e_m + 2 * e_m + cx + abs(mult) * cz
        else:
            value = lipschitz_entropy_bound(V, n, g["C1"]) + cx - mult * cz
    elif which == "lip_disc":
        rn = massart_bound_disc(V, n, g["card_D"])
        value = theorem1_disc(rn if cons else rn / 2, g["Q_x"], n, delta).value
    elif which == "lip_disc_entropy":
        e = lipschitz_entropy_bound(V, n, g["C1"])
        value = (2 * e if cons else e) + cx
    elif which == "nd_disc_3_4":
        notes.append("log argument inverted to (n+1)/n")
        r = nondecreasing_closed_form(g["C"], V, n)
        value = (2 * r if cons else r) + 2 * g["Q_x"] * math.sqrt(2 * math.log(1 / delta) / n)
    else:  # nd_full_3_5
        notes.append("log argument inverted to (n+1)/n")
        C = g["C"]
        if cons:
            value = theorem1_full(
                nondecreasing_closed_form(C, V, n),
                nondecreasing_closed_form(C, V, m),
                nondecreasing_closed_form(C, V, m),
                g["Q_x"], g["Q_z"], lam, n, m, delta, "conservative",
            ).value
        else:
            value = nondecreasing_closed_form(C, V, n) + cx - (1 + lam) * cz
    return BoundReport(which, float(value), dict(g, m=m), variant, notes)
