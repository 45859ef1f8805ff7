"""Dyadic multilinear fractional operators on grid functions.

The maximal operator takes, at each cell center x, the sup over all window
cubes Q containing x of len(Q)^(alpha - m n) prod_j int_Q |f_j|; the integral
operator sums the same quantity over every dyadic level.  Both are evaluated
with one sweep over the cube hierarchy: all cells inside a cube share its
contribution, computed once per cube.

For compactly supported cellwise-constant inputs the level sums above and
below the window collapse to geometric series, so the integral operator
returns the exact value of the full (untruncated) dyadic sum:

* levels coarser than k_min: every chain cube contains the support, each
  level contributes 2^(k (m n - alpha)) prod_j ||f_j||_1, ratio 2^-(m n - alpha);
* levels finer than the cell level K: f_j is constant on the chain cube, the
  level contribution is 2^(-k alpha) prod_j f_j(x), ratio 2^-alpha.

A quadrature version of the multilinear integral kernel is provided for the
one-sided discretization cross-check; it omits only the singular diagonal
cell tuple, which weakens the left side of that comparison.
"""

from __future__ import annotations

import numpy as np

from .dyadic import DyadicCube, LevelWindow, cell_of
from .fields import GridFunction, VectorFunction

__all__ = [
    "OperatorField",
    "maximal_dyadic",
    "integral_dyadic",
    "hl_maximal_dyadic",
    "integral_continuous",
]


class OperatorField(GridFunction):
    """Operator output sampled at finest-cell centers (cellwise constant)."""


def _coarsen(arr: np.ndarray) -> np.ndarray:
    """Sum 2x2x... child blocks: one level up the integral pyramid."""
    for ax in range(arr.ndim):
        shape = arr.shape[:ax] + (arr.shape[ax] // 2, 2) + arr.shape[ax + 1:]
        arr = arr.reshape(shape).sum(axis=ax + 1)
    return arr


def _refine(arr: np.ndarray) -> np.ndarray:
    """Repeat each entry over its 2^n children (constant extension)."""
    for ax in range(arr.ndim):
        arr = np.repeat(arr, 2, axis=ax)
    return arr


def _abs_integral_pyramid(fvec: VectorFunction) -> dict[int, np.ndarray]:
    """prod_j int_Q |f_j| for every cube Q in [root.level, K], keyed by level."""
    per_comp = [np.abs(f.values) * f.cell_volume for f in fvec]
    out = {}
    level = fvec.level
    while True:
        prod = per_comp[0]
        for comp in per_comp[1:]:
            prod = prod * comp
        out[level] = prod
        if level == fvec.root.level:
            break
        per_comp = [_coarsen(c) for c in per_comp]
        level -= 1
    return out


def _check_alpha(alpha: float, m: int, n: int, positive: bool) -> None:
    lo_ok = alpha > 0.0 if positive else alpha >= 0.0
    if not (lo_ok and alpha < m * n):
        bound = "(0, mn)" if positive else "[0, mn)"
        raise ValueError(f"alpha={alpha} outside {bound} with m={m}, n={n}")


def _check_lattice(fvec: VectorFunction, window: LevelWindow) -> None:
    if window.root != fvec.root:
        raise ValueError("window root must match the function root")


def maximal_dyadic(fvec: VectorFunction, alpha: float,
                   window: LevelWindow) -> OperatorField:
    """Multilinear fractional maximal operator over the window's dyadic cubes.

    Cubes above the support contribute 2^(k (mn - alpha)) prod ||f_j||_1,
    increasing in k, so any k_min <= root.level - 1 already realizes the full
    sup on the coarse side; levels below the cell resolution never beat the
    cell-level term (their contributions scale by 2^-alpha per level).
    """
    m, n = fvec.m, fvec.dim
    _check_alpha(alpha, m, n, positive=False)
    _check_lattice(fvec, window)
    K = fvec.level
    c = m * n - alpha
    pyramid = _abs_integral_pyramid(fvec)

    field = None
    for k in range(fvec.root.level, min(window.k_max, K) + 1):
        contrib = 2.0 ** (k * c) * pyramid[k]
        field = contrib if field is None else np.maximum(_refine(field), contrib)
    while field.shape[0] < fvec.components[0].cells_per_axis:
        field = _refine(field)

    if window.k_min <= fvec.root.level - 1:
        l1 = 1.0
        for f in fvec:
            l1 *= f.l1_norm()
        coarse_best = 2.0 ** ((fvec.root.level - 1) * c) * l1
        field = np.maximum(field, coarse_best)
    return OperatorField(fvec.root, K, field)


def integral_dyadic(fvec: VectorFunction, alpha: float,
                    window: LevelWindow) -> OperatorField:
    """Multilinear fractional integral operator: exact infinite dyadic sum.

    Window levels are summed explicitly; the coarse side below k_min and the
    sub-cell side above the cell level close in geometric form, so the result
    has no truncation error.  Inputs must be nonnegative.
    """
    m, n = fvec.m, fvec.dim
    _check_alpha(alpha, m, n, positive=True)
    _check_lattice(fvec, window)
    if not fvec.is_nonnegative():
        raise ValueError("integral operator requires nonnegative inputs")
    K = fvec.level
    if window.k_max < K:
        raise ValueError(
            f"window k_max={window.k_max} must reach the cell level {K}"
        )
    c = m * n - alpha
    pyramid = _abs_integral_pyramid(fvec)

    l1 = 1.0
    for f in fvec:
        l1 *= f.l1_norm()
    # explicit coarse levels [k_min, root.level - 1] ...
    coarse = 0.0
    for k in range(window.k_min, fvec.root.level):
        coarse += 2.0 ** (k * c) * l1
    # ... plus the closed-form tail below k_min
    coarse += 2.0 ** ((window.k_min - 1) * c) / (1.0 - 2.0**-c) * l1

    field = None
    for k in range(fvec.root.level, K + 1):
        contrib = 2.0 ** (k * c) * pyramid[k]
        field = contrib if field is None else _refine(field) + contrib
    field = field + coarse

    point_prod = None
    for f in fvec:
        point_prod = f.values if point_prod is None else point_prod * f.values
    field = field + 2.0 ** (-(K + 1) * alpha) / (1.0 - 2.0**-alpha) * point_prod
    return OperatorField(fvec.root, K, field)


def hl_maximal_dyadic(f: GridFunction, window: LevelWindow) -> OperatorField:
    """Dyadic Hardy-Littlewood maximal function (m=1, alpha=0, |f|)."""
    return maximal_dyadic(VectorFunction((f,)), 0.0, window)


def integral_continuous(fvec: VectorFunction, alpha: float, x,
                        max_tuples: float = 1e8) -> float:
    """Midpoint-rule quadrature of the continuous multilinear kernel at x.

    Sums prod_j f_j(y_j) / (sum_j |x - y_j|)^(mn - alpha) over all m-tuples
    of finest cells, excluding the single all-diagonal tuple (every y_j in
    x's own cell) where the kernel is singular.  The omission makes this a
    one-sided lower quantity; it is used only to measure the constant in the
    continuous-vs-dyadic comparison.
    """
    m, n = fvec.m, fvec.dim
    _check_alpha(alpha, m, n, positive=True)
    f0 = fvec.components[0]
    cells = f0.values.size
    if float(cells) ** m > max_tuples:
        raise ValueError(
            f"{cells}^{m} cell tuples exceed the cost guard {max_tuples:g}"
        )
    x = np.asarray(x, dtype=float)
    centers = f0.cell_centers()
    dists = np.sqrt(((centers - x) ** 2).sum(axis=1))
    own = cell_of(x, f0.level)
    # flat index of x's own cell inside the raster, if x lies in the root
    own_rel = [
        o - (f0.root.index[ax] << (f0.level - f0.root.level))
        for ax, o in enumerate(own)
    ]
    size = f0.cells_per_axis
    diag = None
    if all(0 <= o < size for o in own_rel):
        flat = 0
        for o in own_rel:
            flat = flat * size + o
        diag = flat

    vol = f0.cell_volume
    weights = [f.values.ravel() * vol for f in fvec]

    kernel_sum = dists
    weight_prod = weights[0]
    for j in range(1, m):
        kernel_sum = np.add.outer(kernel_sum, dists)
        weight_prod = np.multiply.outer(weight_prod, weights[j])
    with np.errstate(divide="ignore"):
        kernel = kernel_sum ** (alpha - m * n)
    if diag is not None:
        kernel[(diag,) * m] = 0.0
    return float((weight_prod * kernel).sum())
