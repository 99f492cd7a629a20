"""States as linear functionals valued in exact polynomials of the coupling.

Two independent pipelines produce the same numbers for the sphere state and
check each other with zero tolerance:

* exp_state  -- expands mu_0 e^(coupling * L) as a terminating series: L
  lowers degree by two, so a polynomial of degree m needs floor(m/2) + 1
  terms, each an exact rational.
* ym_moment  -- computes Gaussian moments of the conditioned product measure
  by pairings (Isserlis) over an exactly inverted covariance matrix.

The coupling normalization is the heat-kernel one: a single holonomy of
weight a has second moment 2*a*coupling (density proportional to
exp(-x^2 / (4*coupling*a))).  Weights written with exp(-x^2/(coupling*a))
differ only by rescaling the coupling by 4.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ._frozen import Frozen

from .cells import Cell, format_cell
from .operators import CubicalFamilyOp, SphereOp, apply_operator
from .poly import LinearIdeal, Monomial, Polynomial, format_polynomial


class LambdaPoly(Frozen):
    """A univariate polynomial in the coupling, over exact rationals."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, Fraction] | None = None):
        clean: dict[int, Fraction] = {}
        if coeffs:
            for k, c in coeffs.items():
                c = Fraction(c)
                if c:
                    clean[int(k)] = c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls) -> "LambdaPoly":
        return cls()

    @classmethod
    def const(cls, c) -> "LambdaPoly":
        return cls({0: Fraction(c)})

    def coefficient(self, k: int) -> Fraction:
        return self.coeffs.get(k, Fraction(0))

    def degree(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LambdaPoly") -> "LambdaPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + c
        return LambdaPoly(out)

    def __rmul__(self, c) -> "LambdaPoly":
        c = Fraction(c)
        return LambdaPoly({k: c * v for k, v in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, LambdaPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def evaluate(self, x) -> Fraction:
        """Numeric evaluation (CSV export convenience; checks stay symbolic)."""
        x = Fraction(x)
        return sum((c * x**k for k, c in self.coeffs.items()), Fraction(0))

    def to_json(self) -> dict[str, str]:
        return {str(k): str(self.coeffs[k]) for k in sorted(self.coeffs)}

    def __repr__(self):
        return f"LambdaPoly({format_lambda_poly(self)})"

    def __str__(self):
        return format_lambda_poly(self)


def format_lambda_poly(f: LambdaPoly) -> str:
    if f.is_zero():
        return "0"
    parts = []
    for k in sorted(f.coeffs):
        c = f.coeffs[k]
        mag = abs(c)
        if k == 0:
            body = str(mag)
        else:
            power = "lambda" if k == 1 else f"lambda^{k}"
            body = power if mag == 1 else f"{mag}*{power}"
        parts.append(("-" if c < 0 else "+", body))
    sign, body = parts[0]
    text = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def mu0(f: Polynomial, ideal: LinearIdeal | None = None) -> Fraction:
    """The flat state: reduce modulo the ideal, then send every variable to 0."""
    if ideal is not None:
        f = ideal.reduce(f)
    return f.eval_zero()


def exp_state(op, f: Polynomial, ideal: LinearIdeal | None = None) -> LambdaPoly:
    """mu_0 e^(coupling * L) applied to f, exact in the coupling.

    The series sum_k coupling^k / k! * mu0(L^k f) terminates after
    floor(deg f / 2) + 1 terms because L drops degree by two.
    """
    coeffs: dict[int, Fraction] = {0: mu0(f, ideal)}
    cur = f
    for k in range(1, f.degree() // 2 + 1):
        cur = apply_operator(op, cur)
        coeffs[k] = mu0(cur, ideal) / math.factorial(k)
    return LambdaPoly(coeffs)


class CovarianceMatrix(Frozen):
    """Symmetric rational matrix of second-moment coefficients.

    entry(u, v) is the coefficient of the coupling in the state applied to
    x_u x_v.
    """

    __slots__ = ("variables", "_entries")

    def __init__(self, variables: Sequence, entries: Mapping):
        variables = tuple(variables)
        index = {v: i for i, v in enumerate(variables)}
        clean: dict[tuple, Fraction] = {}
        for (u, v), c in entries.items():
            if u not in index or v not in index:
                raise ValueError(f"entry ({u}, {v}) outside the variable set")
            key = (u, v) if index[u] <= index[v] else (v, u)
            c = Fraction(c)
            if key in clean and clean[key] != c:
                raise ValueError(f"asymmetric entries for {key}")
            clean[key] = c
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "_entries", clean)

    def entry(self, u, v) -> Fraction:
        i = self.variables.index(u)
        j = self.variables.index(v)
        key = (u, v) if i <= j else (v, u)
        return self._entries.get(key, Fraction(0))

    @property
    def size(self) -> int:
        return len(self.variables)

    def rows(self) -> list[list[Fraction]]:
        return [[self.entry(u, v) for v in self.variables] for u in self.variables]

    def __eq__(self, other):
        return (isinstance(other, CovarianceMatrix)
                and self.variables == other.variables
                and self.rows() == other.rows())

    def __repr__(self):
        return f"CovarianceMatrix({self.size} variables)"


def ym_covariance(areas: Sequence) -> CovarianceMatrix:
    """Covariance of the conditioned Gaussian holonomy measure on the sphere.

    The density on x_1..x_{n-1} (with x_n = -sum x_i) is proportional to
    exp(-sum_i x_i^2 / (4*coupling*a_i)); inverting the quadratic form gives
    E[x_i x_j] = coupling * 2(a_i delta_ij - a_i a_j), and the inversion
    result is confirmed against that closed form before returning.
    """
    areas = tuple(Fraction(a) for a in areas)
    SphereOp(areas)  # validates positivity and normalization
    n = len(areas)
    m = n - 1
    precision = [
        [
            (Fraction(1, 4 * areas[i]) if i == j else Fraction(0)) + Fraction(1, 4 * areas[n - 1])
            for j in range(m)
        ]
        for i in range(m)
    ]
    inverse = _invert_rational_matrix(precision)
    closed = {
        (i + 1, j + 1): 2 * (areas[i] * (1 if i == j else 0) - areas[i] * areas[j])
        for i in range(m)
        for j in range(i, m)
    }
    for i in range(m):
        for j in range(i, m):
            if inverse[i][j] / 2 != closed[(i + 1, j + 1)]:
                raise AssertionError("covariance inversion disagrees with the closed form")
    return CovarianceMatrix(tuple(range(1, n)), closed)


def _invert_rational_matrix(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    work = [list(r) + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
            for i, r in enumerate(rows)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if work[r][col]), None)
        if pivot_row is None:
            raise ValueError("matrix is singular")
        work[col], work[pivot_row] = work[pivot_row], work[col]
        pivot = work[col][col]
        work[col] = [x / pivot for x in work[col]]
        for r in range(n):
            if r != col and work[r][col]:
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
    return [row[n:] for row in work]


def isserlis_moment(cov: CovarianceMatrix, monomial: Monomial) -> Fraction:
    """Gaussian moment of a monomial as a sum over perfect pairings.

    Returns the coefficient of coupling^(degree/2); odd degrees vanish.
    """
    factors: list = []
    for v, e in monomial:
        factors.extend([v] * e)
    if len(factors) % 2:
        return Fraction(0)
    return _pairing_sum(cov, factors)


def _pairing_sum(cov: CovarianceMatrix, factors: list) -> Fraction:
    if not factors:
        return Fraction(1)
    head, rest = factors[0], factors[1:]
    total = Fraction(0)
    for i in range(len(rest)):
        c = cov.entry(head, rest[i])
        if c:
            total += c * _pairing_sum(cov, rest[:i] + rest[i + 1 :])
    return total


def ym_moment(areas: Sequence, f: Polynomial) -> LambdaPoly:
    """The Yang-Mills state of f, by exact Gaussian pairings.

    f must already live in the coordinates x_1..x_{n-1} (the last holonomy
    eliminated against the conditioning constraint).
    """
    cov = ym_covariance(areas)
    allowed = set(cov.variables)
    bad = f.variables() - allowed
    if bad:
        raise ValueError(f"variables outside x_1..x_{len(allowed)}: {sorted(bad)}")
    coeffs: dict[int, Fraction] = {}
    for m, c in f.monomial_items():
        deg = sum(e for _, e in m)
        if deg % 2:
            continue
        value = c * isserlis_moment(cov, m)
        if value:
            k = deg // 2
            coeffs[k] = coeffs.get(k, Fraction(0)) + value
    return LambdaPoly(coeffs)


@dataclass(frozen=True)
class MomentComparison:
    monomial: str
    exp_state: LambdaPoly
    ym_moment: LambdaPoly

    @property
    def equal(self) -> bool:
        return self.exp_state == self.ym_moment

    def to_json(self) -> dict:
        return {
            "monomial": self.monomial,
            "exp_state": self.exp_state.to_json(),
            "ym_moment": self.ym_moment.to_json(),
            "equal": self.equal,
        }


@dataclass(frozen=True)
class SphereCheckReport:
    areas: tuple
    max_degree: int
    items: tuple

    @property
    def all_equal(self) -> bool:
        return all(item.equal for item in self.items)

    @property
    def mismatches(self) -> list:
        return [item for item in self.items if not item.equal]

    def to_json(self) -> dict:
        return {
            "areas": [str(a) for a in self.areas],
            "max_degree": self.max_degree,
            "all_equal": self.all_equal,
            "items": [item.to_json() for item in self.items],
        }


def euclidean_monomials(n_vars: int, max_degree: int):
    """All monomials in x_1..x_{n_vars} of total degree <= max_degree."""
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(1, n_vars + 1), deg):
            counts: dict[int, int] = {}
            for v in combo:
                counts[v] = counts.get(v, 0) + 1
            yield tuple(sorted(counts.items()))


def verify_sphere(areas: Sequence, max_degree: int) -> SphereCheckReport:
    """Exact equality of the two sphere-state pipelines, monomial by monomial.

    Every monomial of degree <= max_degree in the euclidean coordinates is
    pushed through both exp_state (with the euclidean image of the sphere
    operator) and ym_moment; the report lists both values for each.
    """
    if max_degree < 2:
        raise ValueError("max_degree must be at least 2")
    areas = tuple(Fraction(a) for a in areas)
    op = SphereOp(areas).to_euclidean()
    items = []
    for mono in euclidean_monomials(len(areas) - 1, max_degree):
        f = Polynomial({mono: Fraction(1)})
        items.append(
            MomentComparison(
                monomial=format_polynomial(f),
                exp_state=exp_state(op, f),
                ym_moment=ym_moment(areas, f),
            )
        )
    return SphereCheckReport(areas=areas, max_degree=max_degree, items=tuple(items))


def covariance_window(family: CubicalFamilyOp, radius: int) -> CovarianceMatrix:
    """Second-moment coefficients 2 a_p delta_pq - 2 b_pq over a window.

    The window holds every plaquette with all coordinates within radius at
    the family's scale, in canonical cell order.
    """
    plaquettes = family.window_plaquettes(radius)
    entries = {}
    for i, p in enumerate(plaquettes):
        a_term = 2 * family.coeff_a(p)
        for q in plaquettes[i:]:
            value = -2 * family.coeff_b(p, q)
            if p == q:
                value += a_term
            if value:
                entries[(p, q)] = value
    return CovarianceMatrix(tuple(plaquettes), entries)


@dataclass(frozen=True)
class PsdReport:
    """Signs of the leading principal minors of a symmetric rational matrix.

    Report only: a sign list with no negative entries is consistent with
    positive semidefiniteness on the window, nothing more is claimed.
    """

    size: int
    signs: tuple

    @property
    def nonnegative(self) -> bool:
        return all(s >= 0 for s in self.signs)

    @property
    def first_negative(self) -> int | None:
        for k, s in enumerate(self.signs):
            if s < 0:
                return k + 1
        return None

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "minor_signs": list(self.signs),
            "nonnegative": self.nonnegative,
        }


def psd_probe(cov: CovarianceMatrix) -> PsdReport:
    """Exact signs of all leading principal minors of the covariance matrix."""
    rows = cov.rows()
    denom = 1
    for row in rows:
        for x in row:
            denom = denom * x.denominator // math.gcd(denom, x.denominator)
    scaled = [[int(x * denom) for x in row] for row in rows]
    return PsdReport(size=cov.size, signs=tuple(_leading_minor_signs(scaled)))


def _leading_minor_signs(matrix: list[list[int]]) -> list[int]:
    """Signs of leading principal minors of an integer matrix.

    Fraction-free elimination: after step k the pivot equals the k-th leading
    minor exactly.  A zero pivot whose leading block has a null vector
    annihilating the whole matrix forces every later leading minor to zero;
    otherwise the remaining minors are computed independently.
    """
    n = len(matrix)
    work = [row[:] for row in matrix]
    signs: list[int] = []
    prev = 1
    for k in range(n):
        pivot = work[k][k]
        if pivot == 0:
            null = _null_vector([row[: k + 1] for row in matrix[: k + 1]])
            if all(
                sum(matrix[i][j] * null[j] for j in range(k + 1)) == 0
                for i in range(n)
            ):
                signs.extend([0] * (n - k))
                return signs
            signs.append(0)
            signs.extend(
                _sign(_det_bareiss([row[: m + 1] for row in matrix[: m + 1]]))
                for m in range(k + 1, n)
            )
            return signs
        signs.append(_sign(pivot))
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                work[i][j] = (work[i][j] * pivot - work[i][k] * work[k][j]) // prev
        prev = pivot
    return signs


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


def _null_vector(block: list[list[int]]) -> list[Fraction]:
    """A nonzero rational null vector of a singular square integer matrix."""
    n = len(block)
    work = [[Fraction(x) for x in row] for row in block]
    where: list[int | None] = [None] * n
    row = 0
    for col in range(n):
        pivot_row = next((r for r in range(row, n) if work[r][col]), None)
        if pivot_row is None:
            continue
        work[row], work[pivot_row] = work[pivot_row], work[row]
        pivot = work[row][col]
        work[row] = [x / pivot for x in work[row]]
        for r in range(n):
            if r != row and work[r][col]:
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[row])]
        where[col] = row
        row += 1
    free = next(col for col in range(n) if where[col] is None)
    null = [Fraction(0)] * n
    null[free] = Fraction(1)
    for col in range(n):
        if where[col] is not None:
            null[col] = -work[where[col]][free]
    return null


def _det_bareiss(matrix: list[list[int]]) -> int:
    """Exact determinant by fraction-free elimination with row pivoting."""
    n = len(matrix)
    work = [row[:] for row in matrix]
    sign, prev = 1, 1
    for k in range(n - 1):
        if work[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if work[i][k]), None)
            if swap is None:
                return 0
            work[k], work[swap] = work[swap], work[k]
            sign = -sign
        pivot = work[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                work[i][j] = (work[i][j] * pivot - work[i][k] * work[k][j]) // prev
        prev = pivot
    return sign * work[n - 1][n - 1]


def covariance_csv_rows(cov: CovarianceMatrix) -> Iterable[tuple[str, str, str]]:
    """(row, col, value) triples over the full symmetric matrix."""
    for u in cov.variables:
        for v in cov.variables:
            yield _var_label(u), _var_label(v), str(cov.entry(u, v))


def _var_label(v) -> str:
    return format_cell(v) if isinstance(v, Cell) else str(v)
