"""Stopping-time sparse families and the positive sparse bounds they carry.

A family is built top-down from the root: the stopping descendants of a cube
S are the maximal dyadic R strictly inside S whose product of component
averages exceeds the threshold factor times that of S; construction recurses
on every stopping cube down to the cell level.  E(S) is S minus its stopping
descendants, kept as an explicit cell mask so sparsity is certified by
counting, never assumed from the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyadic import DyadicCube, LevelWindow, children
from .fields import VectorFunction, cell_block

__all__ = [
    "InvalidSparseFamilyError",
    "SparseFamily",
    "SparseCertificate",
    "SubadditivityResult",
    "default_threshold",
    "build_sparse",
    "verify_sparse",
    "check_masks",
    "sparse_maximal_bound",
    "sparse_integral_bound",
    "subadditivity_check",
    "encode_rle",
    "decode_rle",
]


class InvalidSparseFamilyError(ValueError):
    """A sparse bound was asked to use a family that fails verification."""


def default_threshold(m: int, n: int) -> float:
    """Default stopping factor 2^(mn+1).

    Stopping cubes of S then cover at most 2^-((mn+1)/m) of S, so the
    realized sparsity constant is at least 1 - 2^-((mn+1)/m) >= 1/2.
    """
    return 2.0 ** (m * n + 1)


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """Cubes with their directly-stopping children and cell masks at `level`."""

    root: DyadicCube
    level: int
    members: tuple[DyadicCube, ...]
    stopping: dict
    eta: float
    threshold: float

    @property
    def dim(self) -> int:
        return self.root.dim

    def cell_count(self, cube: DyadicCube) -> int:
        return 1 << (self.dim * (self.level - cube.level))

    def e_cell_count(self, cube: DyadicCube) -> int:
        kids = self.stopping[cube]
        return self.cell_count(cube) - sum(self.cell_count(k) for k in kids)

    def e_mask(self, cube: DyadicCube) -> np.ndarray:
        """Boolean mask of E(cube) on the root's level-`level` raster."""
        shape = (1 << (self.level - self.root.level),) * self.dim
        mask = np.zeros(shape, dtype=bool)
        rng = cell_block(self.root, self.level, cube)
        if rng is None:
            return mask
        mask[tuple(slice(lo, hi) for lo, hi in rng)] = True
        for kid in self.stopping[cube]:
            kr = cell_block(self.root, self.level, kid)
            if kr is not None:
                mask[tuple(slice(lo, hi) for lo, hi in kr)] = False
        return mask


def _avg_product_pyramid(fvec: VectorFunction) -> dict[int, np.ndarray]:
    """prod_j avg_Q |f_j| for every cube between the root and the cell level."""
    per_comp = [np.abs(f.values) * f.cell_volume for f in fvec]
    out = {}
    level = fvec.level
    while True:
        prod = per_comp[0]
        for comp in per_comp[1:]:
            prod = prod * comp
        out[level] = prod * 2.0 ** (level * fvec.dim * fvec.m)
        if level == fvec.root.level:
            break
        coarsened = []
        for comp in per_comp:
            arr = comp
            for ax in range(arr.ndim):
                shape = arr.shape[:ax] + (arr.shape[ax] // 2, 2) + arr.shape[ax + 1:]
                arr = arr.reshape(shape).sum(axis=ax + 1)
            coarsened.append(arr)
        per_comp = coarsened
        level -= 1
    return out


def build_sparse(fvec: VectorFunction, threshold: float,
                 window: LevelWindow) -> SparseFamily:
    """Stopping-time construction with the given exceedance factor.

    Identically-zero input yields the trivial family {root} with eta 1.
    """
    if threshold <= 1.0:
        raise ValueError("stopping threshold must exceed 1")
    if window.root != fvec.root:
        raise ValueError("window root must match the function root")
    root = fvec.root
    bottom = min(window.k_max, fvec.level)
    avgprod = _avg_product_pyramid(fvec)

    def avg_of(cube: DyadicCube) -> float:
        rel = tuple(
            cube.index[ax] - (root.index[ax] << (cube.level - root.level))
            for ax in range(root.dim)
        )
        return float(avgprod[cube.level][rel])

    stopping: dict[DyadicCube, tuple[DyadicCube, ...]] = {}
    stack = [root]
    while stack:
        cube = stack.pop()
        limit = threshold * avg_of(cube)
        kids = []
        frontier = children(cube) if cube.level < bottom else []
        while frontier:
            cand = frontier.pop()
            if avg_of(cand) > limit:
                kids.append(cand)
                stack.append(cand)
            elif cand.level < bottom:
                frontier.extend(children(cand))
        stopping[cube] = tuple(sorted(kids, key=lambda c: (c.level, c.index)))

    members = tuple(sorted(stopping, key=lambda c: (c.level, c.index)))
    family = SparseFamily(root, fvec.level, members, stopping, 0.0, threshold)
    eta = min(
        Fraction(family.e_cell_count(S), family.cell_count(S)) for S in members
    )
    object.__setattr__(family, "eta", float(eta))
    return family


@dataclass(frozen=True)
class SparseCertificate:
    """Outcome of mask-based sparsity verification."""

    ok: bool
    eta: float
    eta_required: float
    disjoint: bool
    overlap: tuple[DyadicCube, DyadicCube] | None
    deficient: tuple[DyadicCube, ...]
    notes: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def check_masks(root: DyadicCube, level: int, items, eta_required: float,
                ) -> SparseCertificate:
    """Verify pairwise-disjoint E masks and per-cube measure lower bounds.

    `items` is a sequence of (cube, mask) with masks on the root's level
    raster.  Failures are reported in the certificate, not raised.
    """
    n = root.dim
    shape = (1 << (level - root.level),) * n
    owner = np.full(shape, -1, dtype=np.int32)
    overlap = None
    deficient = []
    notes = []
    etas = []
    items = list(items)
    for i, (cube, mask) in enumerate(items):
        mask = np.asarray(mask, dtype=bool).reshape(shape)
        clash = mask & (owner >= 0)
        if overlap is None and clash.any():
            pos = tuple(int(v) for v in np.argwhere(clash)[0])
            other = items[int(owner[pos])][0]
            overlap = (other, cube)
            notes.append(
                f"E sets of {other.to_tuple()} and {cube.to_tuple()} intersect"
            )
        owner[mask] = i
        e_cells = int(mask.sum())
        total = 1 << (n * (level - cube.level))
        etas.append(Fraction(e_cells, total))
        if Fraction(e_cells, total) < Fraction(eta_required):
            deficient.append(cube)
            notes.append(
                f"|E| / |S| = {e_cells}/{total} < {eta_required} "
                f"for {cube.to_tuple()}"
            )
    eta = float(min(etas)) if etas else 1.0
    disjoint = overlap is None
    ok = disjoint and not deficient
    return SparseCertificate(
        ok, eta, float(eta_required), disjoint, overlap, tuple(deficient),
        tuple(notes),
    )


def verify_sparse(family: SparseFamily, eta_required: float) -> SparseCertificate:
    """Certify a stopping-time family from its own masks."""
    items = [(S, family.e_mask(S)) for S in family.members]
    notes = []
    for S in family.members:
        for kid in family.stopping[S]:
            if kid.level <= S.level or not S.contains_cube(kid):
                notes.append(
                    f"stopping cube {kid.to_tuple()} is not strictly inside "
                    f"{S.to_tuple()}"
                )
    cert = check_masks(family.root, family.level, items, eta_required)
    if notes:
        cert = SparseCertificate(
            False, cert.eta, cert.eta_required, cert.disjoint, cert.overlap,
            cert.deficient, cert.notes + tuple(notes),
        )
    return cert


def _sparse_terms(family: SparseFamily, fvec: VectorFunction, alpha: float,
                  members):
    if fvec.root != family.root or fvec.level != family.level:
        raise ValueError("family and input live on different lattices")
    m, n = fvec.m, fvec.dim
    if not 0.0 <= alpha < m * n:
        raise ValueError(f"alpha={alpha} outside [0, mn)")
    cert = verify_sparse(family, 0.0)
    if not cert.ok:
        raise InvalidSparseFamilyError("; ".join(cert.notes) or "invalid family")
    chosen = family.members if members is None else tuple(members)
    known = set(family.members)
    for S in chosen:
        if S not in known:
            raise ValueError(f"{S.to_tuple()} is not a member of the family")
    for S in chosen:
        term = 2.0 ** (-S.level * alpha)
        for f in fvec:
            term *= f.average(S)
        yield S, term


def sparse_maximal_bound(family: SparseFamily, fvec: VectorFunction,
                         alpha: float, members=None):
    """sum over S of |S|^(alpha/n) prod_j avg_S |f_j| on E(S).

    The E sets are pairwise disjoint, so each cell receives at most one term.
    """
    from .operators import OperatorField

    shape = (1 << (family.level - family.root.level),) * family.dim
    out = np.zeros(shape)
    for S, term in _sparse_terms(family, fvec, alpha, members):
        out[family.e_mask(S)] += term
    return OperatorField(family.root, family.level, out)


def sparse_integral_bound(family: SparseFamily, fvec: VectorFunction,
                          alpha: float, members=None):
    """Same terms as the maximal bound but spread over all of S (terms stack)."""
    from .operators import OperatorField

    shape = (1 << (family.level - family.root.level),) * family.dim
    out = np.zeros(shape)
    for S, term in _sparse_terms(family, fvec, alpha, members):
        rng = cell_block(family.root, family.level, S)
        if rng is not None:
            out[tuple(slice(lo, hi) for lo, hi in rng)] += term
    return OperatorField(family.root, family.level, out)


@dataclass(frozen=True)
class SubadditivityResult:
    ok: bool
    worst_margin: float

    def __bool__(self) -> bool:
        return self.ok


def subadditivity_check(fields, p: float) -> SubadditivityResult:
    """Cellwise (sum_i g_i)^p <= sum_i g_i^p for exponents p in (0, 1].

    Exponents above 1 are rejected (the inequality reverses).  The margin is
    the minimum of sum g_i^p - (sum g_i)^p over cells; a few ulps of slack
    absorb rounding.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("subadditivity requires 0 < p <= 1")
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field")
    f0 = fields[0]
    for f in fields[1:]:
        if f.root != f0.root or f.level != f0.level:
            raise ValueError("fields must share a lattice")
    stacks = np.stack([f.values for f in fields])
    if float(stacks.min()) < 0.0:
        raise ValueError("fields must be nonnegative")
    lhs = stacks.sum(axis=0) ** p
    rhs = (stacks**p).sum(axis=0)
    margin = rhs - lhs
    tol = 8.0 * np.finfo(float).eps * np.maximum(np.abs(lhs), np.abs(rhs))
    ok = bool((margin >= -tol).all())
    return SubadditivityResult(ok, float(margin.min()))


# ---------------------------------------------------------------------------
# Certificate files: run-length-encoded masks.
# ---------------------------------------------------------------------------

def encode_rle(mask: np.ndarray) -> list[int]:
    """Run lengths of the flattened mask, starting with the zero run."""
    flat = np.asarray(mask, dtype=bool).ravel()
    runs = []
    current, count = False, 0
    for bit in flat:
        if bool(bit) == current:
            count += 1
        else:
            runs.append(count)
            current, count = bool(bit), 1
    runs.append(count)
    return [int(r) for r in runs]


def decode_rle(runs, size: int) -> np.ndarray:
    flat = np.zeros(size, dtype=bool)
    pos, bit = 0, False
    for r in runs:
        r = int(r)
        if bit:
            flat[pos:pos + r] = True
        pos += r
        bit = not bit
    if pos != size:
        raise ValueError(f"run lengths cover {pos} cells, expected {size}")
    return flat


def family_to_cert_dict(family: SparseFamily, input_hash: str = "") -> dict:
    shape = (1 << (family.level - family.root.level),) * family.dim
    return {
        "root": list(family.root.to_tuple()),
        "K": family.level,
        "eta": family.eta,
        "A": family.threshold,
        "input_hash": input_hash,
        "cubes": [
            {
                "cube": list(S.to_tuple()),
                "e_rle": encode_rle(family.e_mask(S).reshape(shape)),
            }
            for S in family.members
        ],
    }


def cert_dict_items(d: dict):
    """(root, level, [(cube, mask), ...]) reconstructed from a certificate."""
    root = DyadicCube.from_tuple(d["root"])
    level = int(d["K"])
    size = (1 << (root.dim * (level - root.level)))
    shape = (1 << (level - root.level),) * root.dim
    items = [
        (DyadicCube.from_tuple(entry["cube"]),
         decode_rle(entry["e_rle"], size).reshape(shape))
        for entry in d["cubes"]
    ]
    return root, level, items
