"""Morrey-type norms over configurable cube families.

All four norms share one engine: the relevant cell quantity (|f|^p times
cell volume, or atom masses weighted by a field power) is binned onto the
window region at the finest window level, turned into a summed-area table,
and every candidate cube becomes an O(2^n) box query.  Candidate cubes are
the dyadic cubes of the window; the optional shifted mode adds, for each of
them, its translates by half a side length along any subset of axes, a
finite surrogate for the supremum over all axis-parallel cubes.

Every norm returns the attaining cube as a witness.  Ties prefer the larger
cube, then the lexicographically smallest corner on the half-step lattice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube, LevelWindow
from .fields import AtomicMeasure, GridFunction, SubResolutionError, VectorFunction

__all__ = [
    "Box",
    "CubeSet",
    "NormResult",
    "lp_norm_on_cube",
    "morrey_norm",
    "product_morrey_norm",
    "radon_morrey_norm",
    "measure_growth_norm",
]

MAX_REGION_CELLS = 1 << 24

MODES = ("dyadic-only", "dyadic-plus-shifts")


@dataclass(frozen=True)
class Box:
    """Axis-parallel cube with side 2^-level and corner on the half-step lattice.

    The corner sits at half_index * 2^-(level+1); even entries along every
    axis mean the box is an honest dyadic cube.
    """

    level: int
    half_index: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.half_index)

    @property
    def side(self) -> float:
        return 2.0**-self.level

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    def lower(self) -> tuple[float, ...]:
        h = 2.0 ** -(self.level + 1)
        return tuple(j * h for j in self.half_index)

    @property
    def is_dyadic(self) -> bool:
        return all(j % 2 == 0 for j in self.half_index)

    def to_dyadic(self) -> DyadicCube | None:
        if not self.is_dyadic:
            return None
        return DyadicCube(self.level, tuple(j // 2 for j in self.half_index))

    @classmethod
    def from_dyadic(cls, cube: DyadicCube) -> Box:
        return cls(cube.level, tuple(2 * m for m in cube.index))

    def to_json(self):
        cube = self.to_dyadic()
        if cube is not None:
            return list(cube.to_tuple())
        return {"shifted": [self.dim, self.level, *self.half_index]}


@dataclass(frozen=True)
class CubeSet:
    """Finite cube family for the norm suprema.

    dyadic-only: every dyadic cube inside the window's coarse root with level
    in [k_min, k_max].  dyadic-plus-shifts: additionally the half-side-length
    translates of each such cube along every nonempty axis subset; shifted
    copies are generated only for levels up to k_max - 1 so that all queries
    stay on the window's own lattice.
    """

    window: LevelWindow
    mode: str = "dyadic-only"
    shifts: tuple[tuple[int, ...], ...] = field(default=None)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown cube-set mode {self.mode!r}")
        n = self.window.root.dim
        if self.shifts is None:
            if self.mode == "dyadic-only":
                shifts = ((0,) * n,)
            else:
                shifts = tuple(itertools.product((0, 1), repeat=n))
        else:
            shifts = tuple(tuple(int(s) for s in sh) for sh in self.shifts)
            for sh in shifts:
                if len(sh) != n or any(s not in (0, 1) for s in sh):
                    raise ValueError(
                        "shift vectors must be half-unit indicators per axis"
                    )
            if (0,) * n not in shifts:
                shifts = ((0,) * n,) + shifts
            if self.mode == "dyadic-only" and len(shifts) > 1:
                raise ValueError("dyadic-only mode admits no nonzero shifts")
        object.__setattr__(self, "shifts", shifts)

    @property
    def dim(self) -> int:
        return self.window.root.dim

    def dilate(self, j: int) -> CubeSet:
        return CubeSet(self.window.dilate(j), self.mode, self.shifts)


@dataclass(frozen=True)
class NormResult:
    """Norm value with the attaining cube and the cube-set mode that produced it."""

    value: float
    witness: Box
    mode: str

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "witness_cube": self.witness.to_json(),
            "cube_set_mode": self.mode,
        }


# ---------------------------------------------------------------------------
# Summed-area machinery.
# ---------------------------------------------------------------------------

def _sat(tensor: np.ndarray) -> np.ndarray:
    """Zero-padded cumulative sums: box totals become 2^n lookups."""
    acc = tensor
    for ax in range(tensor.ndim):
        acc = acc.cumsum(axis=ax)
    padded = np.zeros(tuple(s + 1 for s in tensor.shape))
    padded[tuple(slice(1, None) for _ in tensor.shape)] = acc
    return padded


def _box_sums(sat: np.ndarray, lows: list[np.ndarray], side: int) -> np.ndarray:
    """Sums over boxes [lo, lo + side) for all corner combinations, clipped."""
    n = sat.ndim
    sizes = [s - 1 for s in sat.shape]
    total = None
    for sigma in itertools.product((0, 1), repeat=n):
        idx = [
            np.minimum(lows[d] + side, sizes[d]) if sigma[d] else lows[d]
            for d in range(n)
        ]
        term = sat[np.ix_(*idx)]
        if (n - sum(sigma)) % 2:
            term = -term
        total = term.copy() if total is None else total + term
    return np.maximum(total, 0.0)


def _region_guard(window: LevelWindow) -> None:
    n = window.root.dim
    cells = 1 << (n * (window.k_max - window.k_min))
    if cells > MAX_REGION_CELLS:
        raise ValueError(
            f"window spans {cells} raster cells, beyond the guard "
            f"{MAX_REGION_CELLS}"
        )


def _grid_tensor(f: GridFunction, window: LevelWindow, power: float) -> np.ndarray:
    """|f|^power * cell volume, binned on the window region at level k_max."""
    raster = window.k_max
    if raster > f.level:
        raise SubResolutionError(
            f"window k_max={raster} is finer than the cell level {f.level}"
        )
    _region_guard(window)
    cells = np.abs(f.values) ** power * f.cell_volume
    for _ in range(f.level - raster):
        for ax in range(cells.ndim):
            shape = cells.shape[:ax] + (cells.shape[ax] // 2, 2) + cells.shape[ax + 1:]
            cells = cells.reshape(shape).sum(axis=ax + 1)
    region = window.coarse_root
    size = 1 << (raster - window.k_min)
    tensor = np.zeros((size,) * f.dim)
    offsets = [
        (f.root.index[ax] << (raster - f.root.level))
        - (region.index[ax] << (raster - window.k_min))
        for ax in range(f.dim)
    ]
    block = tuple(
        slice(o, o + cells.shape[ax]) for ax, o in enumerate(offsets)
    )
    tensor[block] = cells
    return tensor


def _measure_tensor(mu: AtomicMeasure, window: LevelWindow,
                    atom_weights: np.ndarray) -> np.ndarray:
    """Atom weights binned on the window region at level k_max.

    Atoms outside the region cannot meet any window cube and are dropped.
    """
    raster = window.k_max
    if raster > mu.resolution:
        raise SubResolutionError(
            f"window k_max={raster} is finer than the atom resolution "
            f"{mu.resolution}"
        )
    _region_guard(window)
    region = window.coarse_root
    size = 1 << (raster - window.k_min)
    tensor = np.zeros((size,) * mu.dim)
    if not mu.atom_count:
        return tensor
    bins = mu.atom_cells() >> (mu.resolution - raster)
    base = np.array(
        [m << (raster - window.k_min) for m in region.index], dtype=np.int64
    )
    rel = bins - base
    inside = np.all((rel >= 0) & (rel < size), axis=1)
    rel = rel[inside]
    np.add.at(tensor, tuple(rel[:, ax] for ax in range(mu.dim)), atom_weights[inside])
    return tensor


def _scan(cubeset: CubeSet, sats: list[np.ndarray], value_fn) -> NormResult:
    """Maximize value_fn(level, box_sums) over the cube family.

    Tie-break: strictly larger values win; on exact ties the coarser level,
    then the lexicographically smaller half-step corner.
    """
    window = cubeset.window
    n = cubeset.dim
    raster = window.k_max
    region = window.coarse_root
    size = sats[0].shape[0] - 1
    best = None  # (value, level, half_index)
    for k in range(window.k_min, window.k_max + 1):
        side = 1 << (raster - k)
        for sigma in cubeset.shifts:
            if any(sigma) and k == window.k_max:
                continue
            lows = [
                np.arange(0, size - side + 1, side) + sigma[d] * (side >> 1)
                for d in range(n)
            ]
            sums = [_box_sums(sat, lows, side) for sat in sats]
            vals = value_fn(k, sums)
            flat = int(np.argmax(vals))
            val = float(vals.ravel()[flat])
            corner = np.unravel_index(flat, vals.shape)
            cells = tuple(int(lows[d][corner[d]]) for d in range(n))
            half = tuple(
                (region.index[d] << (k + 1 - window.k_min))
                + (cells[d] << (k + 1 - raster) if k + 1 >= raster
                   else cells[d] >> (raster - k - 1))
                for d in range(n)
            )
            cand = (val, k, half)
            if best is None or cand[0] > best[0] or (
                cand[0] == best[0] and (cand[1], cand[2]) < (best[1], best[2])
            ):
                best = cand
    value, level, half = best
    return NormResult(value, Box(level, half), cubeset.mode)


# ---------------------------------------------------------------------------
# The four norms.
# ---------------------------------------------------------------------------

def lp_norm_on_cube(f: GridFunction, p: float, cube: DyadicCube) -> float:
    """(int_Q |f|^p)^(1/p), exact for cellwise-constant f."""
    if p <= 0:
        raise ValueError("p must be positive")
    rng = f.block(cube)
    if rng is None:
        return 0.0
    chunk = f.values[tuple(slice(lo, hi) for lo, hi in rng)]
    return float((np.abs(chunk) ** p).sum() * f.cell_volume) ** (1.0 / p)


def _check_window_root(obj_root: DyadicCube, cubeset: CubeSet) -> None:
    if cubeset.window.root != obj_root:
        raise ValueError("cube set window must share the object's root")


def morrey_norm(f: GridFunction, p: float, p0: float, cubes: CubeSet) -> NormResult:
    """sup over the cube set of |Q|^(1/p0 - 1/p) ||f||_{L^p(Q)}."""
    if not 0 < p <= p0:
        raise ValueError(f"need 0 < p <= p0, got p={p}, p0={p0}")
    _check_window_root(f.root, cubes)
    sat = _sat(_grid_tensor(f, cubes.window, p))
    n = f.dim
    expo = 1.0 / p0 - 1.0 / p

    def value(k, sums):
        return 2.0 ** (-k * n * expo) * sums[0] ** (1.0 / p)

    return _scan(cubes, [sat], value)


def product_morrey_norm(fvec: VectorFunction, pvec, p0: float,
                        cubes: CubeSet) -> NormResult:
    """sup over cubes of |Q|^(1/p0 - 1/p) prod_j ||f_j||_{L^{p_j}(Q)}."""
    pvec = tuple(float(pj) for pj in pvec)
    if len(pvec) != fvec.m:
        raise ValueError("one exponent per component required")
    if any(pj <= 1.0 for pj in pvec):
        raise ValueError("component exponents must lie in (1, infinity)")
    p = 1.0 / sum(1.0 / pj for pj in pvec)
    if p > p0:
        raise ValueError(f"need p <= p0, got p={p}, p0={p0}")
    _check_window_root(fvec.root, cubes)
    sats = [
        _sat(_grid_tensor(f, cubes.window, pj)) for f, pj in zip(fvec, pvec)
    ]
    n = fvec.dim
    expo = 1.0 / p0 - 1.0 / p

    def value(k, sums):
        acc = 2.0 ** (-k * n * expo)
        for s, pj in zip(sums, pvec):
            acc = acc * s ** (1.0 / pj)
        return acc

    return _scan(cubes, sats, value)


def radon_morrey_norm(g: GridFunction, mu: AtomicMeasure, q: float, q0: float,
                      cubes: CubeSet) -> NormResult:
    """sup over cubes of |Q|^(1/q0 - 1/q) (int_Q |g|^q dmu)^(1/q).

    The integral reads g at each atom's cell: sum of mass * |g(atom)|^q over
    atoms inside the cube.  Atoms outside g's root see the zero extension.
    """
    if not 0 < q <= q0:
        raise ValueError(f"need 0 < q <= q0, got q={q}, q0={q0}")
    _check_window_root(g.root, cubes)
    if mu.dim != g.dim:
        raise ValueError("dimension mismatch between field and measure")
    if mu.resolution < g.level:
        raise SubResolutionError(
            f"atom resolution {mu.resolution} is coarser than the field cells "
            f"{g.level}"
        )
    if mu.atom_count:
        cells = mu.atom_cells() >> (mu.resolution - g.level)
        base = np.array(
            [m << (g.level - g.root.level) for m in g.root.index], dtype=np.int64
        )
        rel = cells - base
        size = g.cells_per_axis
        inside = np.all((rel >= 0) & (rel < size), axis=1)
        gvals = np.zeros(mu.atom_count)
        gvals[inside] = g.values[tuple(rel[inside, ax] for ax in range(g.dim))]
        weights = mu.masses * np.abs(gvals) ** q
    else:
        weights = np.zeros(0)
    sat = _sat(_measure_tensor(mu, cubes.window, weights))
    n = g.dim
    expo = 1.0 / q0 - 1.0 / q

    def value(k, sums):
        return 2.0 ** (-k * n * expo) * sums[0] ** (1.0 / q)

    return _scan(cubes, [sat], value)


def measure_growth_norm(mu: AtomicMeasure, beta: float,
                        cubes: CubeSet) -> NormResult:
    """sup over cubes of mu(Q) / side(Q)^beta."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if cubes.window.root.dim != mu.dim:
        raise ValueError("dimension mismatch")
    sat = _sat(_measure_tensor(mu, cubes.window, mu.masses.copy()))

    def value(k, sums):
        return 2.0 ** (k * beta) * sums[0]

    return _scan(cubes, [sat], value)
