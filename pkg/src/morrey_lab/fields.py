"""Piecewise-constant grid functions and atomic measures on the dyadic lattice.

A GridFunction is constant on the level-K cells of its root cube and zero
outside, so every integral against a dyadic cube at level <= K is an exact
finite sum.  An AtomicMeasure carries point masses at centers of level-K_mu
cells; cube measures at levels <= K_mu are exact mass sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicCube, cell_of

__all__ = [
    "SubResolutionError",
    "GridFunction",
    "VectorFunction",
    "AtomicMeasure",
    "cell_block",
    "constant_function",
    "indicator_function",
    "power_profile",
    "lebesgue_cell_measure",
    "hyperplane_measure",
    "atoms_measure",
]


class SubResolutionError(ValueError):
    """A query asked for structure below the stored cell resolution."""


def cell_block(root: DyadicCube, level: int, cube: DyadicCube):
    """Half-open cell-index ranges of `cube` inside root's level-`level` raster.

    Returns a tuple of (lo, hi) per axis, clipped to the raster, or None when
    the cube misses the raster entirely.  `cube` may strictly contain root.
    """
    if cube.dim != root.dim:
        raise ValueError("dimension mismatch")
    if cube.level > level:
        raise SubResolutionError(
            f"cube at level {cube.level} is below the cell resolution {level}"
        )
    size = 1 << (level - root.level)
    shift = level - cube.level
    ranges = []
    empty = False
    for ax in range(root.dim):
        base = root.index[ax] << (level - root.level)
        lo = (cube.index[ax] << shift) - base
        hi = lo + (1 << shift)
        lo, hi = max(lo, 0), min(hi, size)
        if hi <= lo:
            empty = True
        ranges.append((lo, hi))
    return None if empty else tuple(ranges)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cellwise-constant function on the level-`level` cells of `root`.

    values has shape (2^(level - root.level),) * n in C order (axis 0 first);
    the function vanishes outside root.
    """

    root: DyadicCube
    level: int
    values: np.ndarray

    def __post_init__(self):
        if self.level < self.root.level:
            raise ValueError("cell level must not be coarser than the root")
        vals = np.asarray(self.values, dtype=float)
        expected = (1 << (self.level - self.root.level),) * self.root.dim
        vals = vals.reshape(expected)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.root.dim

    @property
    def cells_per_axis(self) -> int:
        return 1 << (self.level - self.root.level)

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.dim * self.level)

    def block(self, cube: DyadicCube):
        return cell_block(self.root, self.level, cube)

    def _slice(self, cube: DyadicCube):
        rng = self.block(cube)
        if rng is None:
            return None
        return tuple(slice(lo, hi) for lo, hi in rng)

    def integrate(self, cube: DyadicCube, absolute: bool = False) -> float:
        """Exact integral of f (or |f|) over a dyadic cube at level <= K."""
        sl = self._slice(cube)
        if sl is None:
            return 0.0
        chunk = self.values[sl]
        total = np.abs(chunk).sum() if absolute else chunk.sum()
        return float(total) * self.cell_volume

    def average(self, cube: DyadicCube) -> float:
        """Mean of |f| over the cube: integrate(|f|, Q) / |Q|."""
        return self.integrate(cube, absolute=True) / cube.volume

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum()) * self.cell_volume

    def value_at(self, x) -> float:
        """Cell value at the point x (0 outside the root)."""
        cube = DyadicCube(self.level, cell_of(x, self.level))
        sl = self._slice(cube)
        if sl is None:
            return 0.0
        return float(self.values[sl].reshape(()))

    def cell_centers(self) -> np.ndarray:
        """Array of all cell centers, shape cells x n, C order."""
        axes = [
            ((self.root.index[ax] << (self.level - self.root.level))
             + np.arange(self.cells_per_axis) + 0.5) * 2.0**-self.level
            for ax in range(self.dim)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def dilate(self, j: int) -> GridFunction:
        """x -> f(2^j x), realized exactly: root and cell level shift by j."""
        return GridFunction(
            DyadicCube(self.root.level + j, self.root.index), self.level + j,
            self.values,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.dim,
            "root": [self.root.level, list(self.root.index)],
            "K": self.level,
            "values": [float(v) for v in self.values.ravel()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> GridFunction:
        root = DyadicCube(int(d["root"][0]), tuple(d["root"][1]))
        if root.dim != int(d["n"]):
            raise ValueError("root dimension does not match n")
        return cls(root, int(d["K"]), np.asarray(d["values"], dtype=float))


@dataclass(frozen=True, eq=False)
class VectorFunction:
    """Tuple (f_1, ..., f_m) of grid functions on one lattice."""

    components: tuple[GridFunction, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector function needs at least one component")
        f0 = comps[0]
        for f in comps[1:]:
            if f.root != f0.root or f.level != f0.level:
                raise ValueError("components must share root and cell level")
        object.__setattr__(self, "components", comps)

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> GridFunction:
        return self.components[i]

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def root(self) -> DyadicCube:
        return self.components[0].root

    @property
    def level(self) -> int:
        return self.components[0].level

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def is_nonnegative(self) -> bool:
        return all(float(f.values.min(initial=0.0)) >= 0.0 for f in self.components)

    def dilate(self, j: int) -> VectorFunction:
        return VectorFunction(tuple(f.dilate(j) for f in self.components))


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite nonnegative measure: point masses at level-`resolution` cell centers."""

    dim: int
    resolution: int
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.dim)
        ms = np.asarray(self.masses, dtype=float).reshape(-1)
        if pts.shape[0] != ms.shape[0]:
            raise ValueError("points and masses must have equal length")
        if ms.size and float(ms.min()) < 0.0:
            raise ValueError("masses must be nonnegative")
        pts.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)
        cells = np.floor(pts * 2.0**self.resolution).astype(np.int64)
        cells.setflags(write=False)
        object.__setattr__(self, "_cells", cells)

    @property
    def atom_count(self) -> int:
        return int(self.masses.size)

    def total_mass(self) -> float:
        return float(math.fsum(self.masses.tolist()))

    def atom_cells(self) -> np.ndarray:
        """Level-`resolution` cell index of each atom, shape atoms x n."""
        return self._cells

    def measure_of(self, cube: DyadicCube) -> float:
        """mu(Q) for a dyadic cube at level <= resolution (exact mass sum)."""
        if cube.dim != self.dim:
            raise ValueError("dimension mismatch")
        if cube.level > self.resolution:
            raise SubResolutionError(
                f"cube at level {cube.level} is below the atom resolution "
                f"{self.resolution}"
            )
        if not self.masses.size:
            return 0.0
        shift = self.resolution - cube.level
        inside = np.all(self._cells >> shift == np.asarray(cube.index), axis=1)
        return float(math.fsum(self.masses[inside].tolist()))

    def dilate(self, j: int) -> AtomicMeasure:
        """Masses preserved, positions scaled by 2^-j; resolution shifts by j."""
        return AtomicMeasure(
            self.dim, self.resolution + j, self.points * 2.0**-j, self.masses
        )

    def to_dict(self) -> dict:
        return {
            "n": self.dim,
            "K_mu": self.resolution,
            "atoms": [
                [*(float(c) for c in p), float(w)]
                for p, w in zip(self.points, self.masses)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> AtomicMeasure:
        n = int(d["n"])
        atoms = d["atoms"]
        pts = [row[:n] for row in atoms]
        ms = [row[n] for row in atoms]
        return cls(n, int(d["K_mu"]), np.asarray(pts, dtype=float).reshape(-1, n),
                   np.asarray(ms, dtype=float))


# ---------------------------------------------------------------------------
# Named input families.
# ---------------------------------------------------------------------------

def constant_function(root: DyadicCube, level: int, value: float = 1.0) -> GridFunction:
    shape = (1 << (level - root.level),) * root.dim
    return GridFunction(root, level, np.full(shape, float(value)))


def indicator_function(root: DyadicCube, level: int, cubes) -> GridFunction:
    """Indicator of a union of dyadic cubes, rasterized at the cell level."""
    shape = (1 << (level - root.level),) * root.dim
    vals = np.zeros(shape)
    for cube in cubes:
        rng = cell_block(root, level, cube)
        if rng is not None:
            vals[tuple(slice(lo, hi) for lo, hi in rng)] = 1.0
    return GridFunction(root, level, vals)


def power_profile(root: DyadicCube, level: int, gamma: float,
                  center=None) -> GridFunction:
    """|x - center|^(-gamma) sampled at cell centers.

    The default center is the root's lower corner; any point on the level-K
    corner lattice keeps every sampled distance at least half a cell, so the
    profile stays finite.
    """
    if center is None:
        center = root.lower()
    center = np.asarray(center, dtype=float)
    side = 2.0**-level
    axes = [
        ((root.index[ax] << (level - root.level))
         + np.arange(1 << (level - root.level)) + 0.5) * side - center[ax]
        for ax in range(root.dim)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    dist = np.sqrt(sum(g * g for g in grids))
    return GridFunction(root, level, dist**-gamma)


def lebesgue_cell_measure(root: DyadicCube, level: int) -> AtomicMeasure:
    """One atom per cell with mass = cell volume (Lebesgue on the raster)."""
    probe = constant_function(root, level)
    pts = probe.cell_centers()
    masses = np.full(pts.shape[0], probe.cell_volume)
    return AtomicMeasure(root.dim, level, pts, masses)


def hyperplane_measure(root: DyadicCube, level: int, axis: int = 0,
                       cell: int = 0) -> AtomicMeasure:
    """Uniform mass on the cells with a fixed index along one axis.

    Each atom carries (cell side)^(n-1), the surface measure of its cell's
    slice, so the slab of any aligned cube weighs about its (n-1)-volume.
    """
    n = root.dim
    if not 0 <= axis < n:
        raise ValueError("axis out of range")
    size = 1 << (level - root.level)
    if not 0 <= cell < size:
        raise ValueError("cell index out of range")
    side = 2.0**-level
    axes = []
    for ax in range(n):
        base = root.index[ax] << (level - root.level)
        if ax == axis:
            axes.append(np.array([(base + cell + 0.5) * side]))
        else:
            axes.append((base + np.arange(size) + 0.5) * side)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    masses = np.full(pts.shape[0], side ** (n - 1))
    return AtomicMeasure(n, level, pts, masses)


def atoms_measure(root: DyadicCube, level: int, cells, masses) -> AtomicMeasure:
    """Atoms at the centers of the given absolute cell indices."""
    side = 2.0**-level
    pts = (np.asarray(cells, dtype=np.int64).reshape(-1, root.dim) + 0.5) * side
    return AtomicMeasure(root.dim, level, pts, np.asarray(masses, dtype=float))
