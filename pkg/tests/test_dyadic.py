import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morrey_lab.dyadic import (
    DyadicCube,
    LevelWindow,
    OutOfWindowError,
    ancestor,
    cell_of,
    children,
    cubes_containing,
    enumerate_cubes,
    parent,
    unit_cube,
)


def test_children_bisection_1d():
    kids = children(unit_cube(1))
    assert [k.lower() for k in kids] == [(0.0,), (0.5,)]
    assert [k.upper() for k in kids] == [(0.5,), (1.0,)]


def test_children_quadrants_2d():
    kids = children(unit_cube(2))
    assert len(kids) == 4
    assert {k.lower() for k in kids} == {
        (0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)
    }


def test_children_of_coarse_cube():
    big = DyadicCube(-1, (0,))  # [0, 2)
    kids = children(big)
    assert [k.lower() for k in kids] == [(0.0,), (1.0,)]
    assert all(k.level == 0 for k in kids)


def test_ancestor_examples():
    q = DyadicCube(2, (3,))  # [3/4, 1)
    assert ancestor(q, 0) == unit_cube(1)
    assert ancestor(unit_cube(1), 0) == unit_cube(1)


def test_ancestor_negative_level_via_enumeration():
    # derived: enumerate level -1 cubes near the origin, pick the container
    q = DyadicCube(1, (1,))  # [1/2, 1)
    containers = [
        DyadicCube(-1, (i,)) for i in range(-2, 3)
        if DyadicCube(-1, (i,)).contains_cube(q)
    ]
    assert containers == [DyadicCube(-1, (0,))]  # [0, 2)
    assert ancestor(q, -1) == containers[0]


def test_ancestor_rejects_finer_target():
    with pytest.raises(ValueError):
        ancestor(unit_cube(1), 3)


def test_chain_binary_expansion_of_0_3():
    # the double 0.3 starts 0.0100... in binary
    window = LevelWindow(0, 2, unit_cube(1))
    chain = cubes_containing((0.3,), window)
    assert chain == [
        DyadicCube(0, (0,)), DyadicCube(1, (0,)), DyadicCube(2, (1,)),
    ]


def test_chain_half_open_tie_break():
    window = LevelWindow(0, 1, unit_cube(1))
    chain = cubes_containing((0.5,), window)
    assert chain == [DyadicCube(0, (0,)), DyadicCube(1, (1,))]


def test_chain_corner_point():
    window = LevelWindow(0, 3, unit_cube(1))
    chain = cubes_containing((0.0,), window)
    assert chain == [DyadicCube(k, (0,)) for k in range(4)]


def test_chain_is_strictly_nested_with_exact_levels():
    window = LevelWindow(-2, 5, unit_cube(2))
    chain = cubes_containing((0.37, 0.81), window)
    assert [c.level for c in chain] == list(range(-2, 6))
    for outer, inner in zip(chain, chain[1:]):
        assert outer.contains_cube(inner)
        assert parent(inner) == outer


def test_point_outside_window_rejected():
    window = LevelWindow(0, 2, unit_cube(1))
    with pytest.raises(OutOfWindowError):
        cubes_containing((1.5,), window)


def test_enumerate_counts_1d():
    window = LevelWindow(0, 2, unit_cube(1))
    cubes = list(enumerate_cubes(window, unit_cube(1)))
    assert len(cubes) == 1 + 2 + 4


def test_enumerate_counts_2d():
    window = LevelWindow(0, 1, unit_cube(2))
    cubes = list(enumerate_cubes(window, unit_cube(2)))
    assert len(cubes) == 1 + 4


def test_enumerate_single_level():
    window = LevelWindow(1, 1, DyadicCube(1, (0,)))
    cubes = list(enumerate_cubes(window, DyadicCube(1, (0,))))
    assert cubes == [DyadicCube(1, (0,))]
    window = LevelWindow(0, 1, unit_cube(1))
    level1 = [c for c in enumerate_cubes(window, unit_cube(1)) if c.level == 1]
    assert level1 == [DyadicCube(1, (0,)), DyadicCube(1, (1,))]


def test_same_level_disjointness_by_extent():
    cubes = [DyadicCube(2, (i, j)) for i in range(2) for j in range(2)]
    for a, b in itertools.combinations(cubes, 2):
        overlap = all(
            max(al, bl) < min(au, bu)
            for al, au, bl, bu in zip(a.lower(), a.upper(), b.lower(), b.upper())
        )
        assert not overlap


def test_serialization_round_trip():
    cube = DyadicCube(-3, (5, -2))
    assert cube.to_tuple() == (2, -3, 5, -2)
    assert DyadicCube.from_tuple(cube.to_tuple()) == cube


def test_window_validates_root_level():
    with pytest.raises(ValueError):
        LevelWindow(1, 3, unit_cube(1))


cube_strategy = st.integers(1, 3).flatmap(
    lambda n: st.tuples(
        st.integers(-5, 8),
        st.tuples(*(st.integers(-20, 20) for _ in range(n))),
    )
).map(lambda t: DyadicCube(t[0], t[1]))


@settings(max_examples=60, deadline=None, derandomize=True)
@given(cube_strategy, st.integers(0, 4))
def test_parent_child_round_trip(cube, depth):
    walk = cube
    for _ in range(depth):
        walk = children(walk)[0]
    assert ancestor(walk, cube.level) == cube
    for kid in children(cube):
        assert parent(kid) == cube
        assert cube.contains_cube(kid)


@settings(max_examples=60, deadline=None, derandomize=True)
@given(cube_strategy)
def test_center_lies_in_own_cube(cube):
    assert cube.contains_point(cube.center())
    assert cell_of(cube.center(), cube.level) == cube.index
