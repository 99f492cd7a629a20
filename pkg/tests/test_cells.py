"""Lattice layer: boundaries, subdivision, and the signed symmetry action."""

import pytest
from hypothesis import given, settings

from holoflow.cells import (
    Cell,
    SignedChain,
    SignedSymmetry,
    act,
    act_chain,
    boundary,
    boundary_of_chain,
    box_cells,
    cell_dimension,
    children,
    format_cell,
    parse_cell,
)

from conftest import cells, cell_with_symmetry, cell_with_two_symmetries


def chain(entries):
    return SignedChain({Cell(0, u): k for u, k in entries})


# -- oracle: a child plaquette must be geometrically contained in its parent --

def _axis_interval(u: int) -> tuple[int, int]:
    # closed extent along one axis, in units of the cell's own scale
    return (u - 1, u + 1) if u & 1 else (u, u)


def _contained_in(child: Cell, parent: Cell) -> bool:
    # child at scale n+1, parent at scale n: compare in child units
    for cu, pu in zip(child.coords, parent.coords):
        clo, chi = _axis_interval(cu)
        plo, phi = _axis_interval(pu)
        if clo < 2 * plo or chi > 2 * phi:
            return False
    return True


def children_by_containment(p: Cell) -> frozenset[Cell]:
    base = tuple(2 * c for c in p.coords)
    lo = tuple(b - 2 for b in base)
    hi = tuple(b + 2 for b in base)
    return frozenset(
        q for q in box_cells(p.scale + 1, lo, hi, dim=2) if _contained_in(q, p)
    )


# -- dimension ---------------------------------------------------------------


def test_dimension_counts_odd_coordinates():
    assert cell_dimension(Cell(0, (2, 0, 4))) == 0
    assert cell_dimension(Cell(0, (1, 1, 0))) == 2
    assert cell_dimension(Cell(0, (1, 1, 1, 1))) == 4


def test_cell_equality_includes_scale():
    assert Cell(0, (1, 1, 0)) != Cell(1, (1, 1, 0))
    assert Cell(0, (1, 1, 0)) == Cell(0, (1, 1, 0))


# -- boundary ------------------------------------------------------------------


def test_boundary_of_unit_cube():
    expected = chain(
        [
            ((0, 1, 1), -1),
            ((2, 1, 1), 1),
            ((1, 0, 1), 1),
            ((1, 2, 1), -1),
            ((1, 1, 0), -1),
            ((1, 1, 2), 1),
        ]
    )
    assert boundary(Cell(0, (1, 1, 1))) == expected


def test_boundary_of_interval():
    assert boundary(Cell(0, (1, 0, 0))) == chain([((0, 0, 0), -1), ((2, 0, 0), 1)])


def test_boundary_of_4d_cube_even_first_axis():
    # [2i, 1+2j, 1+2k, 1+2l] at (i,j,k,l) = (1,0,1,2)
    c = Cell(0, (2, 1, 3, 5))
    expected = SignedChain(
        {
            Cell(0, (2, 0, 3, 5)): -1,
            Cell(0, (2, 2, 3, 5)): 1,
            Cell(0, (2, 1, 2, 5)): 1,
            Cell(0, (2, 1, 4, 5)): -1,
            Cell(0, (2, 1, 3, 4)): -1,
            Cell(0, (2, 1, 3, 6)): 1,
        }
    )
    assert boundary(c) == expected


def test_boundary_of_4d_cube_even_last_axis():
    # [1+2i, 1+2j, 1+2k, 2l] at (i,j,k,l) = (0,1,0,1)
    c = Cell(0, (1, 3, 1, 2))
    expected = SignedChain(
        {
            Cell(0, (0, 3, 1, 2)): -1,
            Cell(0, (2, 3, 1, 2)): 1,
            Cell(0, (1, 2, 1, 2)): 1,
            Cell(0, (1, 4, 1, 2)): -1,
            Cell(0, (1, 3, 0, 2)): -1,
            Cell(0, (1, 3, 2, 2)): 1,
        }
    )
    assert boundary(c) == expected


def test_boundary_squares_to_zero_on_unit_cube():
    assert boundary_of_chain(boundary(Cell(0, (1, 1, 1)))).is_zero()


def test_vertex_has_no_boundary():
    with pytest.raises(ValueError, match="vertex has no boundary"):
        boundary(Cell(0, (0, 2, 0)))


@settings(max_examples=150)
@given(cells(min_dim=2))
def test_boundary_squares_to_zero(c):
    assert boundary_of_chain(boundary(c)).is_zero()


# -- subdivision ---------------------------------------------------------------


def test_children_of_base_plaquette():
    got = children(Cell(0, (1, 1, 0)))
    expected = frozenset(
        {Cell(1, (1, 1, 0)), Cell(1, (1, 3, 0)), Cell(1, (3, 1, 0)), Cell(1, (3, 3, 0))}
    )
    assert got == expected
    assert got == children_by_containment(Cell(0, (1, 1, 0)))


def test_children_rejects_non_plaquettes():
    with pytest.raises(ValueError, match="not a plaquette"):
        children(Cell(0, (1, 1, 1)))


@settings(max_examples=100)
@given(cells(min_dim=2))
def test_children_match_containment_oracle(p):
    if p.dim != 2:
        return
    got = children(p)
    assert len(got) == 4
    assert got == children_by_containment(p)
    for q in got:
        assert q.scale == p.scale + 1
        assert q.plane == p.plane


# -- the signed symmetry action ------------------------------------------------


def test_swap_reverses_plane_containing_both_axes():
    g = SignedSymmetry.axis_swap(3, 0, 1)
    assert act(g, Cell(0, (1, 1, 0))) == (Cell(0, (1, 1, 0)), -1)


def test_swap_moves_plaquette_without_sign_when_plane_partly_outside():
    g = SignedSymmetry.axis_swap(3, 0, 1)
    assert act(g, Cell(0, (0, 1, 1))) == (Cell(0, (1, 0, 1)), 1)


def test_identity_action():
    g = SignedSymmetry.identity(4)
    c = Cell(0, (1, 0, 3, 1))
    assert act(g, c) == (c, 1)


def test_reflection_requires_even_center():
    with pytest.raises(ValueError, match="even"):
        SignedSymmetry.reflection(3, 0, center=1)
    with pytest.raises(ValueError, match="even"):
        SignedSymmetry.translation((1, 0, 0))


@settings(max_examples=200)
@given(cell_with_two_symmetries())
def test_action_is_a_group_action(data):
    c, g, h = data
    via_h, sh = act(h, c)
    via_gh, sg = act(g, via_h)
    composed, sc = act(g.compose(h), c)
    assert composed == via_gh
    assert sc == sg * sh


@settings(max_examples=200)
@given(cell_with_symmetry())
def test_action_inverts(data):
    c, g = data
    image, s = act(g, c)
    back, s_inv = act(g.inverse(), image)
    assert back == c
    assert s * s_inv == 1


@settings(max_examples=200)
@given(cell_with_symmetry(min_dim=1))
def test_boundary_commutes_with_action(data):
    c, g = data
    lhs = boundary_of_chain(act_chain(g, SignedChain({c: 1})))
    rhs = act_chain(g, boundary(c))
    assert lhs == rhs


def test_chain_arithmetic():
    a = chain([((1, 0, 0), 1)])
    b = chain([((1, 0, 0), -1), ((0, 1, 0), 2)])
    assert (a + b) == chain([((0, 1, 0), 2)])
    assert (a - a).is_zero()
    assert 3 * b == chain([((1, 0, 0), -3), ((0, 1, 0), 6)])


# -- literals ------------------------------------------------------------------


def test_cell_literal_roundtrip():
    for text in ("[1,1,0]@0", "[1,1,-2]@0", "[2,1,1]@-1", "[1,0,3,5]@2"):
        assert format_cell(parse_cell(text)) == text


def test_bad_cell_literals():
    for text in ("1,1,0", "[1,1,0]", "[1,1,0]@x", "[]@0", "[1,a]@0"):
        with pytest.raises(ValueError):
            parse_cell(text)
