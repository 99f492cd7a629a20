"""Residual computations: every condition here must vanish identically.

Three families of checks, all exact:

* gauge residuals -- for a 3-cell c and plaquette p, the quantity
  <dc,p> a_p - sum_q <dc,q> b_pq.  Zero everywhere means L maps every
  holonomy constraint into the constraint ideal and so acts on the quotient
  algebra.
* compatibility residuals -- coefficients at consecutive scales must be
  related by summation over plaquette children, a_p = sum a_p' and
  b_pq = sum b_p'q'; this is the exact-renormalization property.
* quotient well-definedness -- reduce(L(f_c * g)) = 0 for the constraint
  generators f_c and randomized polynomials g.

Sweeps enumerate finite windows of sites; they are embarrassingly parallel
and reports are sorted canonically so output never depends on scheduling.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .cells import Cell, boundary, box_cells, cells_near, children, format_cell
from .operators import CubicalFamilyOp, apply_operator
from .poly import LinearIdeal, Polynomial, _mono_sort_key


@dataclass(frozen=True)
class ResidualReport:
    condition: str
    site: tuple[str, ...]
    value: Fraction

    @property
    def passed(self) -> bool:
        return self.value == 0

    def sort_key(self):
        return (self.condition, self.site)

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "site": list(self.site),
            "value": str(self.value),
            "pass": self.passed,
        }


def violations(reports: Iterable[ResidualReport]) -> list[ResidualReport]:
    return [r for r in reports if not r.passed]


# -- gauge invariance ---------------------------------------------------------


def gauge_residual(op, cube: Cell, p: Cell) -> Fraction:
    """<dc,p> a_p - sum over faces q of <dc,q> b_pq; zero iff L respects c's constraint at p."""
    if cube.dim != 3:
        raise ValueError(f"{cube} is not a 3-cell")
    if cube.scale != p.scale:
        raise ValueError(f"scale mismatch: {cube} vs {p}")
    faces = boundary(cube)
    total = faces.coefficient(p) * op.coeff_a(p)
    for q, s in faces.items():
        total -= s * op.coeff_b(p, q)
    return total


def solve_base_coefficient(op, cube: Cell, p: Cell) -> Fraction:
    """The a_p value forced by the gauge condition at (cube, p).

    Uses only the operator's b-table: a_p = sum_q <dc,q> b_pq / <dc,p>.
    Requires p to be a face of the cube.
    """
    if cube.dim != 3:
        raise ValueError(f"{cube} is not a 3-cell")
    faces = boundary(cube)
    lead = faces.coefficient(p)
    if lead == 0:
        raise ValueError(f"{p} is not a face of {cube}")
    total = Fraction(0)
    for q, s in faces.items():
        total += s * op.coeff_b(p, q)
    return total / lead


def default_cubes(d: int, scale: int) -> list[Cell]:
    """Representative 3-cells around the origin: all coords in {-1, 0, 1}."""
    return sorted(box_cells(scale, (-1,) * d, (1,) * d, dim=3), key=Cell.sort_key)


def gauge_sites(op, cubes: Sequence[Cell], radius: int):
    """(cube, plaquette) pairs within max-norm distance radius, in universe."""
    for cube in cubes:
        faces = list(boundary(cube).items())
        if not all(op.has_var(q) for q, _ in faces):
            continue
        for p in cells_near(cube, radius, dim=2):
            if op.has_var(p):
                yield cube, p


def gauge_sweep(op, cubes: Sequence[Cell], radius: int, jobs: int = 1) -> list[ResidualReport]:
    """Gauge residuals for every site; sorted canonically."""
    if jobs > 1:
        chunks = [(op, cube, radius) for cube in cubes]
        reports: list[ResidualReport] = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_gauge_chunk, chunks):
                reports.extend(part)
    else:
        reports = []
        for cube in cubes:
            reports.extend(_gauge_chunk((op, cube, radius)))
    reports.sort(key=ResidualReport.sort_key)
    return reports


def _gauge_chunk(args) -> list[ResidualReport]:
    op, cube, radius = args
    faces = list(boundary(cube).items())
    if not all(op.has_var(q) for q, _ in faces):
        return []
    out = []
    cube_label = format_cell(cube)
    for p in cells_near(cube, radius, dim=2):
        if not op.has_var(p):
            continue
        total = Fraction(0)
        lead = 0
        for q, s in faces:
            if q == p:
                lead = s
            total += s * op.coeff_b(p, q)
        value = lead * op.coeff_a(p) - total
        out.append(ResidualReport("gauge", (cube_label, format_cell(p)), value))
    return out


# -- the specialized invariance identity (d=3, tables + reflection rules) ----


def alpha_extended(family: CubicalFamilyOp, i: int, j: int, k: int) -> int:
    """Base-plane interaction table extended to all integers by reflections."""
    if family.d != 3:
        raise ValueError("index-space tables are three-dimensional")
    return family._alpha3(abs(i), abs(j), abs(k))


def beta_extended(family: CubicalFamilyOp, i: int, j: int, k: int) -> int:
    """Cross-plane interaction table extended to all integers by reflections.

    The first index reflects through the base plaquette's center (i -> 1-i,
    orientation sign -1), the second through the shared axis (j -> -j, no
    sign), the third through the transverse hyperplane (k -> -1-k, sign -1).
    """
    if family.d != 3:
        raise ValueError("index-space tables are three-dimensional")
    sign = 1
    if i < 0:
        i = 1 - i
        sign = -sign
    if j < 0:
        j = -j
    if k < 0:
        k = -1 - k
        sign = -sign
    return sign * family._beta3(i, j, k)


def invariance_table_residual(family: CubicalFamilyOp, i: int, j: int, k: int) -> Fraction:
    """Gauge residual at the cube [1+2i,1+2j,1+2k] vs the base plaquette,
    written purely in index space.

    Independent of gauge_residual's canonicalized lookup path: evaluates the
    identity  <dc,p> a_0 + beta(i,j,k) - beta(i+1,j,k) + beta(j,i,k)
    - beta(j+1,i,k) + alpha(i,j,k) - alpha(i,j,k+1)  with stored reflection
    rules; the two paths must agree at every site.
    """
    if (i, j, k) == (0, 0, 0):
        lead = -1
    elif (i, j, k) == (0, 0, -1):
        lead = 1
    else:
        lead = 0
    expr = (
        lead * family.a0
        + beta_extended(family, i, j, k)
        - beta_extended(family, i + 1, j, k)
        + beta_extended(family, j, i, k)
        - beta_extended(family, j + 1, i, k)
        + alpha_extended(family, i, j, k)
        - alpha_extended(family, i, j, k + 1)
    )
    return expr * family.scale_factor


# -- sphere quotient condition ------------------------------------------------


def sphere_condition(op) -> list[Fraction]:
    """a_p - sum_q b_pq per variable; all zero iff L descends modulo sum x_i."""
    out = []
    for p in op.variables():
        total = op.coeff_a(p)
        for q in op.variables():
            total -= op.coeff_b(p, q)
        out.append(total)
    return out


# -- multiscale compatibility -------------------------------------------------


def compat_residual_a(family: CubicalFamilyOp, p: Cell) -> Fraction:
    """a_n(p) minus the sum of a_{n+1} over p's four children."""
    fine = family.with_scale(family.scale + 1)
    return family.coeff_a(p) - sum(fine.coeff_a(c) for c in children(p))


def child_interaction_sum(family: CubicalFamilyOp, p: Cell, q: Cell) -> Fraction:
    """sum of b_{n+1}(p', q') over the 4 x 4 children of p and q."""
    fine = family.with_scale(family.scale + 1)
    total = Fraction(0)
    for pc in children(p):
        for qc in children(q):
            total += fine.coeff_b(pc, qc)
    return total


def compat_residual_b(family: CubicalFamilyOp, p: Cell, q: Cell) -> Fraction:
    """b_n(p,q) minus the child-pair sum at scale n+1."""
    return family.coeff_b(p, q) - child_interaction_sum(family, p, q)


def base_plaquettes(d: int, scale: int) -> list[Cell]:
    """One plaquette per plane through the origin cell: coords in {0, 1}."""
    return sorted(box_cells(scale, (0,) * d, (1,) * d, dim=2), key=Cell.sort_key)


def compat_sweep(family: CubicalFamilyOp, plaquettes: Sequence[Cell], radius: int,
                 jobs: int = 1) -> list[ResidualReport]:
    """Both compatibility residuals over (p, q) windows; sorted canonically."""
    if jobs > 1:
        chunks = [(family, p, radius) for p in plaquettes]
        reports: list[ResidualReport] = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_compat_chunk, chunks):
                reports.extend(part)
    else:
        reports = []
        for p in plaquettes:
            reports.extend(_compat_chunk((family, p, radius)))
    reports.sort(key=ResidualReport.sort_key)
    return reports


def _compat_chunk(args) -> list[ResidualReport]:
    family, p, radius = args
    fine = family.with_scale(family.scale + 1)
    p_children = children(p)
    p_label = format_cell(p)
    out = [
        ResidualReport(
            "compat_a",
            (p_label,),
            family.coeff_a(p) - sum(fine.coeff_a(c) for c in p_children),
        )
    ]
    for q in cells_near(p, radius, dim=2):
        total = family.coeff_b(p, q)
        for pc in p_children:
            for qc in children(q):
                total -= fine.coeff_b(pc, qc)
        out.append(ResidualReport("compat_b", (p_label, format_cell(q)), total))
    return out


# -- quotient well-definedness ------------------------------------------------


def welldefined_property(op, ideal: LinearIdeal, trials: int, seed: int,
                         max_degree: int = 3, max_terms: int = 3,
                         pool_radius: int = 2) -> list[ResidualReport]:
    """reduce(L(f_c * g)) for every generator f_c and seeded random g.

    All normal forms must vanish.  For lattice ideals the random polynomials
    draw variables from all plaquettes within max-norm pool_radius of the
    generators' variables, not just the generators' own faces; interactions
    reach diagonally, so descent failures can involve nearby outside
    plaquettes.  A failing site reports, as its value, the coefficient of the
    smallest surviving monomial in canonical order (a deterministic nonzero
    witness).
    """
    rng = random.Random(seed)
    generator_vars = {v for g in ideal.generators for v in g.variables()}
    pool_set = set(generator_vars)
    if pool_radius > 0:
        for v in generator_vars:
            if isinstance(v, Cell):
                pool_set.update(cells_near(v, pool_radius, dim=2))
    pool = sorted((v for v in pool_set if op.has_var(v)), key=lambda v: str(v))
    if not pool:
        return []
    reports = []
    for t in range(trials):
        g = _random_polynomial(rng, pool, max_degree, max_terms)
        for idx, f_c in enumerate(ideal.generators):
            normal = ideal.reduce(apply_operator(op, f_c * g))
            if normal.is_zero():
                value = Fraction(0)
            else:
                value = normal.terms[min(normal.terms, key=_mono_sort_key)]
            reports.append(ResidualReport("welldefined", (f"gen{idx}", f"trial{t}"), value))
    return reports


def _random_polynomial(rng: random.Random, pool: list, max_degree: int, max_terms: int) -> Polynomial:
    f = Polynomial.zero()
    for _ in range(rng.randint(1, max_terms)):
        term = Polynomial.const(Fraction(rng.randint(-4, 4) or 1, rng.randint(1, 3)))
        for _ in range(rng.randint(0, max_degree)):
            term = term * Polynomial.var(rng.choice(pool))
        f = f + term
    return f
