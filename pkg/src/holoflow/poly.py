"""Sparse multivariate polynomials over exact rationals, and linear ideals.

Variables are either plaquette cells (lattice holonomies) or plain 1-based
integer indices (the sphere case).  Coefficients are fractions.Fraction, so
every identity checked downstream is exact; there is no floating-point mode.

A LinearIdeal is spanned by degree-1 generators with zero constant term (the
shape of all holonomy constraints here).  It is triangularized once at
construction; reduce() is then a substitution homomorphism onto normal forms,
so reduce(f*g) = reduce(reduce(f)*reduce(g)) and reduce(f) = 0 exactly when
f lies in the ideal.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from ._frozen import Frozen

from .cells import Cell, format_cell, parse_cell

Monomial = tuple  # tuple[(var, exponent), ...] sorted by variable key


def _var_key(v):
    if isinstance(v, Cell):
        return (1, v.scale, v.coords)
    return (0, v)


def _format_var(v) -> str:
    if isinstance(v, Cell):
        return "x" + format_cell(v)
    return f"x{v}"


def _mono_from_dict(d: dict) -> Monomial:
    return tuple(sorted(((v, e) for v, e in d.items() if e), key=lambda p: _var_key(p[0])))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return _mono_from_dict(d)


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_sort_key(m: Monomial):
    return (_mono_degree(m), tuple((_var_key(v), e) for v, e in m))


class Polynomial(Frozen):
    """Sparse polynomial: a map from monomials to nonzero rationals."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[m] = c
        object.__setattr__(self, "terms", clean)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls()

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({(): Fraction(c)})

    @classmethod
    def one(cls) -> "Polynomial":
        return cls.const(1)

    @classmethod
    def var(cls, v, exp: int = 1) -> "Polynomial":
        if exp < 0:
            raise ValueError("negative exponent")
        if exp == 0:
            return cls.one()
        return cls({((v, exp),): Fraction(1)})

    @classmethod
    def linear(cls, coeffs: Mapping) -> "Polynomial":
        return cls({((v, 1),): Fraction(c) for v, c in coeffs.items()})

    # -- ring operations ---------------------------------------------------

    @staticmethod
    def _coerce(x) -> "Polynomial":
        if isinstance(x, Polynomial):
            return x
        if isinstance(x, (int, Fraction)):
            return Polynomial.const(x)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative exponent")
        result = Polynomial.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- calculus and queries ----------------------------------------------

    def derive(self, v) -> "Polynomial":
        """Formal partial derivative with respect to variable v."""
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.get(v, 0)
            if not e:
                continue
            if e == 1:
                del d[v]
            else:
                d[v] = e - 1
            mm = _mono_from_dict(d)
            out[mm] = out.get(mm, Fraction(0)) + c * e
        return Polynomial(out)

    def eval_zero(self) -> Fraction:
        """The constant term: evaluation with every variable sent to 0."""
        return self.terms.get((), Fraction(0))

    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(_mono_degree(m) for m in self.terms)

    def variables(self) -> set:
        out = set()
        for m in self.terms:
            for v, _ in m:
                out.add(v)
        return out

    def substitute(self, mapping: Mapping) -> "Polynomial":
        """Ring homomorphism sending each mapped variable to a polynomial."""
        out = Polynomial.zero()
        powers: dict = {}
        for m, c in self.terms.items():
            prod = Polynomial.const(c)
            for v, e in m:
                if v in mapping:
                    key = (v, e)
                    if key not in powers:
                        powers[key] = Polynomial._coerce(mapping[v]) ** e
                    prod = prod * powers[key]
                else:
                    prod = prod * Polynomial.var(v, e)
            out = out + prod
        return out

    def monomial_items(self):
        return self.terms.items()

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)})"

    def __str__(self):
        return format_polynomial(self)


def format_polynomial(f: Polynomial) -> str:
    """Canonical text form, e.g. "3/2*x[1,1,0]@0^2*x[0,1,1]@0 - x1"."""
    if f.is_zero():
        return "0"
    parts = []
    for m in sorted(f.terms, key=_mono_sort_key, reverse=True):
        c = f.terms[m]
        factors = []
        for v, e in m:
            factors.append(_format_var(v) + (f"^{e}" if e > 1 else ""))
        mag = abs(c)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = str(mag) + "*" + "*".join(factors)
        parts.append(("-" if c < 0 else "+", body))
    sign, body = parts[0]
    text = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def parse_polynomial(text: str):
    """Parse a polynomial literal.

    Terms look like "3/2*x[1,1,0]@0^2*x[0,1,1]@0" (lattice variables) or
    "x1^2*x2" (indexed variables); terms are joined with + and -.
    """
    s = "".join(text.split())
    if not s:
        raise ValueError("empty polynomial literal")
    total = Polynomial.zero()
    i, n = 0, len(s)
    while i < n:
        sign = 1
        while i < n and s[i] in "+-":
            if s[i] == "-":
                sign = -sign
            i += 1
        if i >= n:
            raise ValueError(f"dangling sign in {text!r}")
        start, depth = i, 0
        while i < n:
            ch = s[i]
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
            elif ch in "+-" and depth == 0 and s[i - 1] not in "@^*/":
                break
            i += 1
        term = _parse_term(s[start:i], text)
        total = total + sign * term
    return total


def _parse_term(term: str, context: str) -> Polynomial:
    if not term:
        raise ValueError(f"empty term in {context!r}")
    prod = Polynomial.one()
    for factor in _split_factors(term):
        if factor.startswith("x"):
            prod = prod * _parse_var_factor(factor, context)
        else:
            try:
                prod = prod * Fraction(factor)
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"bad factor {factor!r} in {context!r}") from None
    return prod


def _split_factors(term: str) -> list[str]:
    out, start, depth = [], 0, 0
    for i, ch in enumerate(term):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "*" and depth == 0:
            out.append(term[start:i])
            start = i + 1
    out.append(term[start:])
    return [f for f in out if f]


def _parse_var_factor(factor: str, context: str) -> Polynomial:
    body, exp = factor, 1
    if "]" in factor:
        caret = factor.find("^", factor.rfind("]"))
    else:
        caret = factor.find("^")
    if caret >= 0:
        body, exp_text = factor[:caret], factor[caret + 1 :]
        try:
            exp = int(exp_text)
        except ValueError:
            raise ValueError(f"bad exponent in {factor!r} ({context!r})") from None
        if exp < 0:
            raise ValueError(f"negative exponent in {factor!r}")
    name = body[1:]
    if name.startswith("["):
        var = parse_cell(name)
    else:
        try:
            var = int(name)
        except ValueError:
            raise ValueError(f"bad variable {body!r} in {context!r}") from None
        if var < 1:
            raise ValueError(f"variable indices are 1-based: {body!r}")
    return Polynomial.var(var, exp)


def polynomial_to_json(f: Polynomial) -> list[dict]:
    """JSON shape mirroring the term map: [{"monomial": [...], "coeff": "p/q"}]."""
    items = []
    for m in sorted(f.terms, key=_mono_sort_key):
        items.append(
            {
                "monomial": [[_format_var(v), e] for v, e in m],
                "coeff": str(f.terms[m]),
            }
        )
    return items


class LinearIdeal(Frozen):
    """Ideal spanned by linear forms with zero constant term.

    Triangularization eliminates, for each independent generator, its largest
    variable in the declared total order (index order for integer variables,
    (scale, coords) order for cells).  The resulting substitution map is fully
    back-substituted, so one substitution pass computes normal forms.
    """

    __slots__ = ("generators", "_subst")

    def __init__(self, generators: Iterable[Polynomial]):
        gens = tuple(generators)
        for g in gens:
            if g.degree() > 1:
                raise ValueError(f"generator is not linear: {g}")
            if g.eval_zero():
                raise ValueError(f"generator has a constant term: {g}")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "_subst", {})
        for g in gens:
            self._insert({v: c for m, c in g.terms.items() for v, _ in m})

    @classmethod
    def trivial(cls) -> "LinearIdeal":
        return cls(())

    def _insert(self, form: dict) -> None:
        subst = self._subst
        for v in [v for v in form if v in subst]:
            c = form.pop(v)
            for w, cw in subst[v].items():
                form[w] = form.get(w, Fraction(0)) + c * cw
        form = {v: c for v, c in form.items() if c}
        if not form:
            return
        lead = max(form, key=_var_key)
        coef = form.pop(lead)
        rhs = {w: -cw / coef for w, cw in form.items()}
        for other in subst.values():
            if lead in other:
                c = other.pop(lead)
                for w, cw in rhs.items():
                    other[w] = other.get(w, Fraction(0)) + c * cw
                for w in [w for w, cw in other.items() if not cw]:
                    del other[w]
        subst[lead] = rhs

    @property
    def rank(self) -> int:
        return len(self._subst)

    @property
    def leading_variables(self) -> set:
        return set(self._subst)

    def substitution_for(self, v) -> Polynomial | None:
        """The normal form of an eliminated variable, or None."""
        if v not in self._subst:
            return None
        return Polynomial.linear(self._subst[v])

    def reduce(self, f: Polynomial) -> Polynomial:
        """Normal form of f modulo the ideal."""
        if not self._subst or not (f.variables() & set(self._subst)):
            return f
        mapping = {v: Polynomial.linear(rhs) for v, rhs in self._subst.items()}
        return f.substitute(mapping)

    def contains(self, f: Polynomial) -> bool:
        return self.reduce(f).is_zero()

    def __repr__(self):
        return f"LinearIdeal(rank={self.rank}, generators={len(self.generators)})"


def bianchi_form(cube: Cell) -> Polynomial:
    """The linear holonomy constraint of a 3-cell: sum of its signed faces."""
    from .cells import boundary

    if cube.dim != 3:
        raise ValueError(f"{cube} is not a 3-cell (dimension {cube.dim})")
    return Polynomial.linear({p: k for p, k in boundary(cube).items()})


def ideal_from_cubes(cubes: Iterable[Cell]) -> LinearIdeal:
    """The linear ideal generated by the constraints of the given 3-cells."""
    return LinearIdeal(bianchi_form(c) for c in cubes)
