"""Dyadic cube lattice: half-open cubes 2^-k(m + [0,1)^n) indexed by integers.

Cube identity is the pair (level, integer index vector); geometry (corners,
side lengths) is derived on demand.  Containment, ancestry and enumeration
are pure integer arithmetic, so round-trips are exact.  The half-open
convention [a, b) per axis makes boundary membership deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

__all__ = [
    "DyadicCube",
    "LevelWindow",
    "OutOfWindowError",
    "cell_of",
    "unit_cube",
    "children",
    "parent",
    "ancestor",
    "cubes_containing",
    "enumerate_cubes",
]


class OutOfWindowError(ValueError):
    """A queried point lies outside the coarsest cube of a level window."""


def cell_of(x, level: int) -> tuple[int, ...]:
    """Index vector of the level-`level` dyadic cube containing the point x.

    Scaling by a power of two is exact in binary floating point, so points
    given as dyadic rationals (cell centers, corners) resolve with no
    rounding; the floor realizes the half-open convention.
    """
    scale = 2.0**level
    return tuple(math.floor(float(c) * scale) for c in x)


@dataclass(frozen=True)
class DyadicCube:
    """The cube 2^-level (index + [0,1)^n), half-open along every axis."""

    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if not self.index:
            raise ValueError("cube needs at least one axis")

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0**-self.level

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    def lower(self) -> tuple[float, ...]:
        s = self.side
        return tuple(m * s for m in self.index)

    def upper(self) -> tuple[float, ...]:
        s = self.side
        return tuple((m + 1) * s for m in self.index)

    def center(self) -> tuple[float, ...]:
        s = self.side
        return tuple((m + 0.5) * s for m in self.index)

    def contains_point(self, x) -> bool:
        return cell_of(x, self.level) == self.index

    def contains_cube(self, other: DyadicCube) -> bool:
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return other.level >= self.level and ancestor(other, self.level) == self

    def translate(self, offset: tuple[int, ...]) -> DyadicCube:
        """Shift by whole cubes at this level (integer lattice steps)."""
        return DyadicCube(self.level, tuple(m + o for m, o in zip(self.index, offset)))

    def to_tuple(self) -> tuple[int, ...]:
        """(n, level, m_1, ..., m_n) integer serialization for JSON reports."""
        return (self.dim, self.level, *self.index)

    @classmethod
    def from_tuple(cls, t) -> DyadicCube:
        n, level = int(t[0]), int(t[1])
        index = tuple(int(i) for i in t[2:])
        if len(index) != n:
            raise ValueError(f"index length {len(index)} does not match dimension {n}")
        return cls(level, index)


def unit_cube(n: int) -> DyadicCube:
    """[0,1)^n."""
    return DyadicCube(0, (0,) * n)


def children(cube: DyadicCube) -> list[DyadicCube]:
    """The 2^n cubes at level+1 that partition `cube`, in lexicographic order."""
    level = cube.level + 1
    return [
        DyadicCube(level, tuple(2 * m + e for m, e in zip(cube.index, eps)))
        for eps in itertools.product((0, 1), repeat=cube.dim)
    ]


def parent(cube: DyadicCube) -> DyadicCube:
    return DyadicCube(cube.level - 1, tuple(m >> 1 for m in cube.index))


def ancestor(cube: DyadicCube, target_level: int) -> DyadicCube:
    """The unique dyadic cube at `target_level` containing `cube`.

    Arithmetic right shift floors negative indices correctly.
    """
    if target_level > cube.level:
        raise ValueError(
            f"target level {target_level} is finer than cube level {cube.level}"
        )
    shift = cube.level - target_level
    return DyadicCube(target_level, tuple(m >> shift for m in cube.index))


@dataclass(frozen=True)
class LevelWindow:
    """Truncation window [k_min, k_max] around a root cube.

    k_min is the coarsest admitted level (ancestors of the root), k_max the
    finest; the root's own level must lie inside.
    """

    k_min: int
    k_max: int
    root: DyadicCube

    def __post_init__(self):
        if not self.k_min <= self.root.level <= self.k_max:
            raise ValueError(
                f"window requires k_min <= root level <= k_max, "
                f"got [{self.k_min}, {self.k_max}] around level {self.root.level}"
            )

    @property
    def coarse_root(self) -> DyadicCube:
        return ancestor(self.root, self.k_min)

    def dilate(self, j: int) -> LevelWindow:
        shifted = DyadicCube(self.root.level + j, self.root.index)
        return LevelWindow(self.k_min + j, self.k_max + j, shifted)


def cubes_containing(x, window: LevelWindow) -> list[DyadicCube]:
    """The containment chain of dyadic cubes around x, one per window level.

    Strictly nested coarse-to-fine; each cube is the parent of the next.
    Raises OutOfWindowError if x escapes the coarsest ancestor of the root.
    """
    if not window.coarse_root.contains_point(x):
        raise OutOfWindowError(
            f"point {tuple(x)} outside the level-{window.k_min} ancestor of the root"
        )
    return [
        DyadicCube(k, cell_of(x, k)) for k in range(window.k_min, window.k_max + 1)
    ]


def enumerate_cubes(window: LevelWindow, region: DyadicCube):
    """Yield every dyadic cube inside `region` with level in the window.

    Levels ascend from region.level to k_max; within a level the index order
    is lexicographic.  The count at level k is 2^(n (k - region.level)).
    """
    if not window.k_min <= region.level <= window.k_max:
        raise ValueError("region level outside the window")
    for k in range(region.level, window.k_max + 1):
        shift = k - region.level
        ranges = [range(m << shift, (m + 1) << shift) for m in region.index]
        for idx in itertools.product(*ranges):
            yield DyadicCube(k, idx)
