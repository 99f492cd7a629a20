"""Coefficient families, symmetry canonicalization, and operator application."""

import itertools
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
import hypothesis.strategies as st

from holoflow.cells import Cell, SignedSymmetry, act
from holoflow.operators import (
    CubicalFamilyOp,
    ExplicitOp,
    SphereOp,
    operator_from_json,
)
from holoflow.poly import Polynomial

from conftest import symmetries

x = Polynomial.var

BASE3 = Cell(0, (1, 1, 0))
BASE4 = Cell(0, (1, 1, 0, 0))
MAIN3 = CubicalFamilyOp.main(3)
MAIN4 = CubicalFamilyOp.main(4)
ALT3 = CubicalFamilyOp.alt()


# -- oracle: orbit transport under the full signed symmetry group -------------


def _small_group(d=3):
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            for trans in itertools.product((-4, -2, 0, 2, 4), repeat=d):
                yield SignedSymmetry(perm, signs, trans)


def orbit_value(p: Cell, q: Cell, targets: dict) -> Fraction:
    """Transport (p, q) into the raw table patterns in `targets` and read the
    value off with the accumulated orientation signs; every route must agree."""
    found = set()
    for g in _small_group(p.ambient_dim):
        gp, sp = act(g, p)
        gq, sq = act(g, q)
        key = (gp.coords, gq.coords)
        if key in targets:
            found.add(sp * sq * targets[key])
    assert len(found) == 1, f"inconsistent orbit values {found}"
    return Fraction(found.pop())


# -- oracle: sympy application of a second-order operator ----------------------

_SYMS = {i: sympy.Symbol(f"x{i}") for i in range(1, 8)}


def _to_sympy(f: Polynomial):
    expr = sympy.Integer(0)
    for m, c in f.monomial_items():
        term = sympy.Rational(c.numerator, c.denominator)
        for v, e in m:
            term *= _SYMS[v] ** e
        expr += term
    return sympy.expand(expr)


def sympy_apply(op, f: Polynomial, n_vars: int):
    expr = _to_sympy(f)
    out = sympy.Integer(0)
    for i in range(1, n_vars + 1):
        a = op.coeff_a(i)
        out += sympy.Rational(a.numerator, a.denominator) * sympy.diff(expr, _SYMS[i], 2)
    for i in range(1, n_vars + 1):
        for j in range(1, n_vars + 1):
            b = op.coeff_b(i, j)
            out -= sympy.Rational(b.numerator, b.denominator) * sympy.diff(expr, _SYMS[i], _SYMS[j])
    return sympy.expand(out)


# -- coefficient values ----------------------------------------------------------


def test_coeff_a_values():
    assert MAIN3.coeff_a(BASE3) == 12
    assert MAIN3.with_scale(1).coeff_a(Cell(1, (1, 1, 0))) == 3
    assert ALT3.coeff_a(BASE3) == 1
    sphere = SphereOp([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    assert sphere.coeff_a(2) == Fraction(1, 4)


def test_coeff_b_reference_values():
    cases = [
        ((1, 1, 0), 2),    # same plaquette
        ((0, 1, 1), 2),    # shared axis, touching
        ((1, 0, 1), -2),   # swapped-plane mirror of the previous
        ((3, 3, 2), -2),   # diagonal same-plane pattern
        ((1, 1, -2), -2),  # reflected transverse offset
        ((1, 1, 2), -2),
        ((3, 1, 0), 0),
        ((2, 1, 1), -2),
        ((1, 2, 1), 2),
    ]
    for uq, want in cases:
        assert MAIN3.coeff_b(BASE3, Cell(0, uq)) == want, uq


def test_reflected_offset_agrees_with_orbit_oracle():
    # the raw table pattern [1,1,2] carries value -2; transport [1,1,-2] to it
    value = orbit_value(BASE3, Cell(0, (1, 1, -2)), {((1, 1, 0), (1, 1, 2)): -2})
    assert value == -2
    assert MAIN3.coeff_b(BASE3, Cell(0, (1, 1, -2))) == value


def test_swapped_plane_agrees_with_orbit_oracle():
    value = orbit_value(BASE3, Cell(0, (1, 0, 1)), {((1, 1, 0), (0, 1, 1)): 2})
    assert value == -2
    assert MAIN3.coeff_b(BASE3, Cell(0, (1, 0, 1))) == value


def test_disjoint_planes_do_not_interact():
    assert MAIN4.coeff_b(BASE4, Cell(0, (0, 0, 1, 1))) == 0
    assert MAIN4.coeff_b(BASE4, Cell(0, (2, 0, 1, 1))) == 0


def test_sphere_coeff_b_is_area_product():
    sphere = SphereOp([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    assert sphere.coeff_b(1, 2) == Fraction(1, 8)
    assert sphere.coeff_b(2, 2) == Fraction(1, 16)


def test_base_table_values_via_lookup():
    def beta(i, j, k):
        return MAIN3.coeff_b(BASE3, Cell(0, (2 * i, 1 + 2 * j, 1 + 2 * k)))

    def alpha(i, j, k):
        return MAIN3.coeff_b(BASE3, Cell(0, (1 + 2 * i, 1 + 2 * j, 2 * k)))

    assert alpha(0, 0, 0) == 2
    assert (beta(0, 0, 0), beta(1, 0, 0)) == (2, -2)
    assert (beta(0, 1, 0), beta(1, 1, 0)) == (1, -1)
    for k in range(1, 4):
        assert alpha(0, 0, k) == alpha(k, k, k) == -2
        assert beta(k + 1, k, k) == beta(k + 1, k + 1, k) == -1
    assert alpha(1, 0, 0) == alpha(0, 2, 1) == 0
    assert beta(0, 0, 1) == beta(3, 1, 1) == 0


def test_alt_family_table():
    assert ALT3.coeff_b(BASE3, Cell(0, (1, 1, 2))) == -1
    assert ALT3.coeff_b(BASE3, Cell(0, (1, 1, -4))) == -1
    assert ALT3.coeff_b(BASE3, BASE3) == 0
    assert ALT3.coeff_b(BASE3, Cell(0, (0, 1, 1))) == 0
    assert dict(ALT3.support(BASE3, 3)) == {
        Cell(0, (1, 1, -2)): Fraction(-1),
        Cell(0, (1, 1, 2)): Fraction(-1),
    }


def test_scaling_by_quarter_per_scale():
    pairs = [((1, 1, 0), (0, 1, 1)), ((1, 1, 0), (3, 3, 2)), ((1, 1, 0), (2, 1, 1))]
    for up, uq in pairs:
        base = MAIN3.coeff_b(Cell(0, up), Cell(0, uq))
        for n in (-1, 1, 2):
            fam = MAIN3.with_scale(n)
            assert fam.coeff_b(Cell(n, up), Cell(n, uq)) == base * Fraction(4) ** (-n)
        assert MAIN3.with_scale(-1).coeff_a(Cell(-1, up)) == 48


# -- reflection identities as computed facts of the lookup ----------------------


def beta_raw(fam, i, j, k):
    return fam.coeff_b(fam.base_plaquette(), Cell(fam.scale, (2 * i, 1 + 2 * j, 1 + 2 * k)))


def alpha_raw(fam, i, j, k):
    return fam.coeff_b(fam.base_plaquette(), Cell(fam.scale, (1 + 2 * i, 1 + 2 * j, 2 * k)))


def test_beta_reflection_identities():
    rng = range(-3, 4)
    for i, j, k in itertools.product(rng, rng, rng):
        assert beta_raw(MAIN3, -i, j, k) == -beta_raw(MAIN3, 1 + i, j, k)
        assert beta_raw(MAIN3, i, -j, k) == beta_raw(MAIN3, i, j, k)
        # reflecting the transverse odd coordinate sends k to -1-k
        assert beta_raw(MAIN3, i, j, -k) == -beta_raw(MAIN3, i, j, k - 1)


def test_alpha_reflection_identities():
    rng = range(-3, 4)
    for i, j, k in itertools.product(rng, rng, rng):
        assert alpha_raw(MAIN3, -i, j, k) == alpha_raw(MAIN3, i, j, k)
        assert alpha_raw(MAIN3, i, -j, k) == alpha_raw(MAIN3, i, j, k)
        assert alpha_raw(MAIN3, i, j, -k) == alpha_raw(MAIN3, i, j, k)
        assert alpha_raw(MAIN3, i, j, k) == alpha_raw(MAIN3, j, i, k)


# -- symmetry and equivariance ---------------------------------------------------


@st.composite
def plaquette_pairs(draw, max_d=5):
    d = draw(st.integers(3, max_d))
    fam = CubicalFamilyOp.main(d)

    def plaq():
        axes = draw(st.permutations(range(d)))[:2]
        coords = []
        for i in range(d):
            half = draw(st.integers(-4, 4))
            coords.append(2 * half + (1 if i in axes else 0))
        return Cell(0, coords)

    return fam, plaq(), plaq()


@settings(max_examples=150, deadline=None)
@given(plaquette_pairs(max_d=3))
def test_coeff_b_is_symmetric_in_3d(data):
    fam, p, q = data
    assert fam.coeff_b(p, q) == fam.coeff_b(q, p)


def test_d4_transverse_rule_is_orientation_sensitive():
    # The d=4 reduction folds the transverse offset into the cross-plane
    # index.  The two orientations of this pair canonicalize to patterns
    # (0,1,1,1) and (2,1,0,1), whose summed-index table values differ, so the
    # extended coefficient function cannot be symmetric off the diagonal
    # strips.  Both lookups are pinned here as computed by the rule.
    p = Cell(0, (0, 0, 1, 1))
    q = Cell(0, (-3, -2, -1, 0))
    assert MAIN4.coeff_b(p, q) == 0
    assert MAIN4.coeff_b(q, p) == -1


@pytest.mark.xfail(
    strict=True,
    reason="no symmetric extension matches the d>=4 transverse-sum rule; "
    "the pair below is a counterexample",
)
def test_d4_symmetry_would_need_consistent_merged_orbits():
    p = Cell(0, (0, 0, 1, 1))
    q = Cell(0, (-3, -2, -1, 0))
    assert MAIN4.coeff_b(p, q) == MAIN4.coeff_b(q, p)


@settings(max_examples=150, deadline=None)
@given(plaquette_pairs(max_d=4), st.data())
def test_coeff_b_is_equivariant(data, extra):
    fam, p, q = data
    g = extra.draw(symmetries(p.ambient_dim))
    gp, sp = act(g, p)
    gq, sq = act(g, q)
    assert fam.coeff_b(p, q) == sp * sq * fam.coeff_b(gp, gq)


@settings(max_examples=100, deadline=None)
@given(plaquette_pairs(max_d=4), st.data())
def test_alt_family_is_equivariant(data, extra):
    _, p, q = data
    if p.ambient_dim != 3:
        return
    g = extra.draw(symmetries(3))
    gp, sp = act(g, p)
    gq, sq = act(g, q)
    assert ALT3.coeff_b(p, q) == sp * sq * ALT3.coeff_b(gp, gq)


# -- dimension reduction ----------------------------------------------------------


def test_d4_tables_reduce_to_d3():
    for i, j, k, l in itertools.product(range(3), repeat=4):
        q4 = Cell(0, (1 + 2 * i, 1 + 2 * j, 2 * k, 2 * l))
        q3 = Cell(0, (1 + 2 * i, 1 + 2 * j, 2 * (k + l)))
        assert MAIN4.coeff_b(BASE4, q4) == MAIN3.coeff_b(BASE3, q3)
        q4b = Cell(0, (2 * i, 1 + 2 * j, 1 + 2 * k, 2 * l))
        q3b = Cell(0, (2 * i, 1 + 2 * j, 1 + 2 * (k + l)))
        assert MAIN4.coeff_b(BASE4, q4b) == MAIN3.coeff_b(BASE3, q3b)


def test_d5_lookup_matches_d3_reduction():
    fam5 = CubicalFamilyOp.main(5)
    base5 = Cell(0, (1, 1, 0, 0, 0))
    q5 = Cell(0, (1, 1, 2, -2, 0))
    q3 = Cell(0, (1, 1, 4))
    assert fam5.coeff_b(base5, q5) == MAIN3.coeff_b(BASE3, q3)


# -- operator application ----------------------------------------------------------


def test_apply_sphere_square():
    areas = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
    op = SphereOp(areas)
    got = op.apply(x(1, 2))
    a1 = areas[0]
    assert got == Polynomial.const(2 * a1 - 2 * a1 * a1)
    assert _to_sympy(got) == sympy_apply(op, x(1, 2), 3)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_apply_matches_sympy_oracle(data):
    areas = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
    op = SphereOp(areas)
    f = Polynomial.zero()
    for _ in range(data.draw(st.integers(1, 3))):
        term = Polynomial.const(data.draw(st.integers(-3, 3)))
        for _ in range(data.draw(st.integers(0, 4))):
            term = term * x(data.draw(st.integers(1, 3)))
        f = f + term
    assert _to_sympy(op.apply(f)) == sympy_apply(op, f, 3)


def test_apply_kills_linear_polynomials():
    op = SphereOp([Fraction(1, 2), Fraction(1, 2)])
    assert op.apply(x(1) - 3 * x(2) + 5).is_zero()
    assert MAIN3.apply(x(BASE3) + 1).is_zero()


def test_apply_lattice_pair():
    f = x(BASE3) * x(Cell(0, (0, 1, 1)))
    assert MAIN3.apply(f) == Polynomial.const(-4)


def test_apply_drops_degree_by_two():
    op = SphereOp([Fraction(1, 2), Fraction(1, 2)])
    f = x(1, 4)
    g = op.apply(f)
    assert g == 3 * x(1, 2)
    assert op.apply(g) == Polynomial.const(Fraction(3, 2))


def test_product_formula():
    op = SphereOp([Fraction(2, 5), Fraction(2, 5), Fraction(1, 5)])
    f = x(1, 2) + x(2)
    g = x(1) * x(3) - 2
    cross = Polynomial.zero()
    for i in range(1, 4):
        cross = cross + op.coeff_a(i) * f.derive(i) * g.derive(i)
        for j in range(1, 4):
            cross = cross - op.coeff_b(i, j) * f.derive(i) * g.derive(j)
    assert op.apply(f * g) == op.apply(f) * g + f * op.apply(g) + 2 * cross


def test_apply_rejects_outside_universe():
    op = SphereOp([Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(ValueError, match="universe"):
        op.apply(x(3))
    with pytest.raises(ValueError, match="plaquette"):
        MAIN3.apply(x(Cell(0, (1, 1, 1))))


def test_coeff_b_scale_mismatch():
    with pytest.raises(ValueError, match="different scales"):
        MAIN3.coeff_b(BASE3, Cell(1, (1, 1, 0)))


# -- euclidean reduction of the sphere operator -------------------------------------


def test_euclidean_collapse_two_plaquettes():
    a = Fraction(1, 3)
    op = SphereOp([a, 1 - a])
    euclid = op.to_euclidean()
    assert euclid.apply(x(1, 2)) == Polynomial.const(2 * a * (1 - a))

    # substitution oracle: dropping the last derivative from the full symbol,
    # then re-substituting d1 -> d1 - d2, must reproduce the full symbol
    xi1, xi2 = sympy.symbols("xi1 xi2")
    full = a * xi1**2 + (1 - a) * xi2**2 - (a * xi1 + (1 - a) * xi2) ** 2
    collapsed = sympy.expand(full.subs(xi2, 0))
    assert collapsed == sympy.expand(a * (1 - a) * xi1**2)
    assert sympy.expand(collapsed.subs(xi1, xi1 - xi2)) == sympy.expand(full)


def test_euclidean_cross_coefficient():
    op = SphereOp([Fraction(1, 3)] * 3)
    euclid = op.to_euclidean()
    assert euclid.apply(x(1) * x(2)) == Polynomial.const(Fraction(-2, 9))


def test_euclidean_matches_quotient_action():
    import random

    from holoflow.poly import LinearIdeal

    rng = random.Random(3)
    for n in (3, 4, 5):
        areas = [Fraction(1, n)] * n
        op = SphereOp(areas)
        euclid = op.to_euclidean()
        ideal = LinearIdeal([Polynomial.linear({i: 1 for i in range(1, n + 1)})])
        for _ in range(20):
            f = Polynomial.zero()
            for _ in range(rng.randint(1, 4)):
                term = Polynomial.const(rng.randint(-3, 3))
                for _ in range(rng.randint(0, 4)):
                    term = term * x(rng.randint(1, n))
                f = f + term
            assert euclid.apply(ideal.reduce(f)) == ideal.reduce(op.apply(f))


# -- explicit tables and serialization ------------------------------------------------


def test_explicit_op_universe_and_sparsity():
    op = ExplicitOp(a={1: Fraction(1, 2), 2: Fraction(1, 2)}, b={(1, 2): Fraction(1, 4)})
    assert op.coeff_b(2, 1) == Fraction(1, 4)
    assert op.coeff_b(1, 1) == 0
    with pytest.raises(ValueError, match="universe"):
        op.coeff_a(3)
    with pytest.raises(ValueError, match="universe"):
        ExplicitOp(a={1: 1}, b={(1, 2): 1})


def test_sphere_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        SphereOp([Fraction(1, 2), Fraction(1, 4)])
    with pytest.raises(ValueError, match="positive"):
        SphereOp([Fraction(1, 1), Fraction(0, 1)])
    with pytest.raises(ValueError, match="at least two"):
        SphereOp([Fraction(1, 1)])


def test_operator_json_roundtrip():
    ops = [
        MAIN3,
        MAIN4.with_scale(-1),
        ALT3.with_scale(2),
        MAIN3.perturbed("beta", (1, 0, 0), 1),
        SphereOp([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]),
        ExplicitOp(a={BASE3: Fraction(12)}, b={(BASE3, BASE3): Fraction(2)}),
    ]
    for op in ops:
        assert operator_from_json(op.to_json()) == op


def test_operator_json_rejects_unknown():
    with pytest.raises(ValueError, match="variant"):
        operator_from_json({"variant": "nope"})
    with pytest.raises(ValueError, match="variant"):
        operator_from_json({})


def test_perturbed_family_changes_one_orbit():
    fam = MAIN3.perturbed("beta", (0, 0, 0), 5)
    assert fam.coeff_b(BASE3, Cell(0, (0, 1, 1))) == 7
    assert fam.coeff_b(BASE3, Cell(0, (3, 3, 2))) == -2
    assert MAIN3.coeff_b(BASE3, Cell(0, (0, 1, 1))) == 2
