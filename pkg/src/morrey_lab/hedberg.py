"""Exponent algebra, the two-scale telescoping split, and the Hedberg infimum.

The pointwise mechanism behind the trace estimates: for normalized inputs the
fractional integral at x is controlled, for every scale t, by
t^(alpha-beta) D(x) + t^(alpha - n/p0) with D the dominating field (the
beta-maximal function in regime thm1.1, the beta-integral in thm1.2); the
crossing of the two branches gives the optimal scale in closed form and the
bound D(x)^(1/theta) with theta = (n - beta p0) / (n - alpha p0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dyadic import DyadicCube, LevelWindow
from .fields import VectorFunction
from .norms import CubeSet, product_morrey_norm
from .operators import OperatorField, integral_dyadic, maximal_dyadic

__all__ = [
    "REGIMES",
    "ExponentError",
    "ExponentSet",
    "hypothesis_violations",
    "exponents",
    "HedbergOptimum",
    "hedberg_optimal",
    "TelescopeParts",
    "telescoping_split",
    "hedberg_pointwise_bound",
    "normalize_product_morrey",
]

REGIMES = ("thm1.1", "thm1.2", "thm2.1", "thm2.2")


class ExponentError(ValueError):
    """Raised with the full list of violated regime hypotheses."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ExponentSet:
    """Validated exponent tuple for one estimate regime.

    q = theta p and q0 = theta p0 with theta = (n - beta p0)/(n - alpha p0);
    the maximal-operator regimes (thm2.x) take beta = alpha, so theta = 1,
    q = p and q0 = p0 there.
    """

    n: int
    m: int
    pvec: tuple[float, ...]
    p: float
    p0: float
    alpha: float
    beta: float
    theta: float
    q: float
    q0: float
    regime: str

    @property
    def growth_index(self) -> float:
        """Exponent of the measure-growth norm on the right-hand side."""
        return self.n - self.beta * self.p


def hypothesis_violations(n: int, m: int, pvec, p0: float, alpha: float,
                          beta: float | None, regime: str) -> list[str]:
    """Every violated hypothesis of the chosen regime, each named."""
    if regime not in REGIMES:
        return [f"unknown regime {regime!r}"]
    out = []
    if not (isinstance(n, int) and n >= 1):
        out.append("n must be a positive integer")
    if not (isinstance(m, int) and m >= 1):
        out.append("m must be a positive integer")
    pvec = tuple(float(pj) for pj in pvec)
    if len(pvec) != m:
        out.append("P must have exactly m entries")
        return out
    for j, pj in enumerate(pvec):
        if not pj > 1.0:
            out.append(f"p_{j + 1} in (1, infinity) violated: p_{j + 1}={pj}")
    if out:
        return out
    p = 1.0 / sum(1.0 / pj for pj in pvec)
    if regime == "thm1.1" and not p > 1.0:
        out.append(f"1 < p violated: p={p}")
    if regime in ("thm1.2", "thm2.2") and not p <= 1.0:
        out.append(f"p <= 1 violated: p={p}")
    if not p <= p0:
        out.append(f"p <= p0 violated: p={p}, p0={p0}")
    if not alpha > 0.0:
        out.append(f"0 < alpha violated: alpha={alpha}")
    if not alpha < m * n:
        out.append(f"alpha < mn violated: alpha={alpha}, mn={m * n}")
    if alpha > 0.0 and not p0 < n / alpha:
        out.append(f"p0 < n/alpha violated: p0={p0}, n/alpha={n / alpha}")
    if regime in ("thm1.1", "thm1.2"):
        if beta is None:
            out.append("beta is required for the integral-trace regimes")
        else:
            if not beta > 0.0:
                out.append(f"0 < beta violated: beta={beta}")
            if regime == "thm1.1" and not beta < alpha:
                out.append(f"beta < alpha violated: beta={beta}, alpha={alpha}")
            if regime == "thm1.2" and not beta <= alpha:
                out.append(f"beta <= alpha violated: beta={beta}, alpha={alpha}")
    if not out:
        b = alpha if regime in ("thm2.1", "thm2.2") else float(beta)
        if not n - b * p > 0.0:
            out.append(
                f"n - beta p > 0 (measure-growth index positive) violated: "
                f"n - beta p = {n - b * p}"
            )
    return out


def exponents(n: int, m: int, pvec, p0: float, alpha: float,
              beta: float | None = None, regime: str = "thm1.1") -> ExponentSet:
    """Validated exponent set, or ExponentError listing every failed hypothesis."""
    violations = hypothesis_violations(n, m, pvec, p0, alpha, beta, regime)
    if violations:
        raise ExponentError(violations)
    pvec = tuple(float(pj) for pj in pvec)
    p = 1.0 / sum(1.0 / pj for pj in pvec)
    b = alpha if regime in ("thm2.1", "thm2.2") else float(beta)
    theta = (n - b * p0) / (n - alpha * p0)
    return ExponentSet(
        n=n, m=m, pvec=pvec, p=p, p0=float(p0), alpha=float(alpha), beta=b,
        theta=theta, q=theta * p, q0=theta * p0, regime=regime,
    )


class HedbergOptimum(NamedTuple):
    t_star: float
    bound: float


def hedberg_optimal(mval: float, exps: ExponentSet) -> HedbergOptimum:
    """Crossing scale and optimal two-branch bound for a dominating value M.

    Solves t^(alpha-beta) M = t^(alpha - n/p0): t* = M^(-p0/(n - beta p0)),
    and the common branch value there is M^(1/theta).  M = 0 sends the
    decreasing branch to zero as t grows, so the infimum is 0.
    """
    if mval < 0.0:
        raise ValueError("the dominating value must be nonnegative")
    denom = exps.n - exps.beta * exps.p0
    if denom <= 0.0:
        raise ValueError(
            f"beta >= n/p0 keeps the two branches from crossing "
            f"(n - beta p0 = {denom})"
        )
    if mval == 0.0:
        return HedbergOptimum(math.inf, 0.0)
    t_star = mval ** (-exps.p0 / denom)
    bound = mval ** ((exps.n - exps.alpha * exps.p0) / denom)
    return HedbergOptimum(t_star, bound)


class TelescopeParts(NamedTuple):
    inner: float
    outer: float


def _chain_contributions(fvec: VectorFunction, alpha: float, x,
                         window: LevelWindow):
    """Per-level chain terms at x plus both closed-form tails.

    Returns (levels dict k -> term for k in [k_min, K], coarse_tail, fine_tail).
    """
    m, n = fvec.m, fvec.dim
    c = m * n - alpha
    root = fvec.root
    K = fvec.level
    terms = {}
    l1 = 1.0
    for f in fvec:
        l1 *= f.l1_norm()
    for k in range(window.k_min, root.level):
        terms[k] = 2.0 ** (k * c) * l1
    for k in range(root.level, K + 1):
        prod = 1.0
        for f in fvec:
            prod *= f.integrate(DyadicCube(k, tuple(
                int(np.floor(xi * 2.0**k)) for xi in x)), absolute=True)
        terms[k] = 2.0 ** (k * c) * prod
    coarse_tail = 2.0 ** ((window.k_min - 1) * c) / (1.0 - 2.0**-c) * l1
    point = 1.0
    for f in fvec:
        point *= abs(f.value_at(x))
    fine_tail = 2.0 ** (-(K + 1) * alpha) / (1.0 - 2.0**-alpha) * point
    return terms, coarse_tail, fine_tail


def telescoping_split(fvec: VectorFunction, alpha: float, cube: DyadicCube,
                      x, window: LevelWindow) -> TelescopeParts:
    """Split the integral operator's chain sum at x around a pivot cube.

    inner collects the cubes R contained in the pivot (levels >= its own,
    including the sub-cell tail); outer the strict ancestors (coarser levels
    plus the closed-form tail below k_min).  inner + outer is exactly the
    integral operator's value at x; the two parts feed the separate
    inequality checks of the harness.
    """
    if not cube.contains_point(x):
        raise ValueError("the split point must lie in the pivot cube")
    if not fvec.root.contains_point(x):
        raise ValueError("the split point must lie in the root")
    if not window.k_min <= cube.level <= fvec.level:
        raise ValueError("pivot level outside the window")
    if not fvec.is_nonnegative():
        raise ValueError("integral operator requires nonnegative inputs")
    terms, coarse_tail, fine_tail = _chain_contributions(fvec, alpha, x, window)
    inner = sum(t for k, t in sorted(terms.items()) if k >= cube.level) + fine_tail
    outer = sum(t for k, t in sorted(terms.items()) if k < cube.level) + coarse_tail
    return TelescopeParts(inner, outer)


def hedberg_pointwise_bound(fvec: VectorFunction, exps: ExponentSet,
                            window: LevelWindow) -> OperatorField:
    """Dominating field whose theta-root controls the alpha-integral operator.

    Regime thm1.1 dominates with the beta-maximal operator, thm1.2 with the
    beta-integral operator; the maximal-operator regimes have no Hedberg
    step and are rejected.  Inputs are expected normalized to unit product
    Morrey norm.
    """
    if exps.regime == "thm1.1":
        base = maximal_dyadic(fvec, exps.beta, window)
    elif exps.regime == "thm1.2":
        base = integral_dyadic(fvec, exps.beta, window)
    else:
        raise ValueError(f"no pointwise bound in regime {exps.regime}")
    return OperatorField(base.root, base.level, base.values ** (1.0 / exps.theta))


def normalize_product_morrey(fvec: VectorFunction, pvec, p0: float,
                             cubes: CubeSet):
    """Rescale to unit product Morrey norm, splitting evenly across slots.

    Each component is divided by the m-th root of the norm, preserving slot
    symmetry.  Returns the rescaled vector and the original norm value.
    """
    norm = product_morrey_norm(fvec, pvec, p0, cubes).value
    if norm <= 0.0:
        raise ValueError("cannot normalize an identically-zero input")
    scale = norm ** (-1.0 / fvec.m)
    from .fields import GridFunction

    scaled = VectorFunction(tuple(
        GridFunction(f.root, f.level, f.values * scale) for f in fvec
    ))
    return scaled, norm
