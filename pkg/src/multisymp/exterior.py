"""Differential forms and multivector fields on a single chart.

Both are stored sparsely as ``{index tuple: coefficient}`` with strictly
increasing 0-based index tuples. Signs are computed from permutation
parity. Coefficients are normalized on construction and literal zeros are
dropped, so two forms are structurally equal iff their normal forms agree.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Mapping, Sequence

import sympy as sp

from . import linalg
from .errors import ChartMismatch, DegreeError, Undecided
from .symexpr import _PREC_MUL, Chart, ZeroTest, _print, as_polynomial, is_zero, normalize, to_text

Index = tuple[int, ...]


def merge_sign(a: Index, b: Index) -> tuple[int, Index]:
    """Sign of the shuffle sorting ``a + b`` and the sorted tuple; 0 on overlap."""
    seq = a + b
    if len(set(seq)) != len(seq):
        return 0, ()
    inversions = sum(1 for x in a for y in b if x > y)
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


def permutation_sign(seq: Sequence[int]) -> int:
    """Parity of ``seq`` relative to its sorted order (0 if it repeats)."""
    if len(set(seq)) != len(seq):
        return 0
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


def _clean(chart: Chart, degree: int, terms: Mapping[Index, object], check: bool) -> dict[Index, sp.Expr]:
    out: dict[Index, sp.Expr] = {}
    m = chart.dim
    for idx, c in terms.items():
        idx = tuple(idx)
        if check:
            if len(idx) != degree:
                raise DegreeError(f"index {idx} does not have length {degree}")
            if any(i < 0 or i >= m for i in idx) or any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index {idx} is not strictly increasing within chart {chart.name}")
        c = normalize(chart.parse(c) if isinstance(c, str) else sp.sympify(c))
        if c != 0:
            if check:
                chart.check(c)
            out[idx] = c
    return dict(sorted(out.items()))


class _Sparse:
    __slots__ = ("chart", "degree", "terms")
    kind = "tensor"

    def __init__(self, chart: Chart, degree: int, terms: Mapping[Index, object] | None = None,
                 *, check: bool = True):
        if degree < 0:
            raise DegreeError(f"negative degree {degree}")
        self.chart = chart
        self.degree = degree
        self.terms = _clean(chart, degree, terms or {}, check)

    def _new(self, degree: int, terms: Mapping[Index, object]):
        return type(self)(self.chart, degree, terms, check=False)

    def _same(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        if other.chart != self.chart:
            raise ChartMismatch(f"{self.chart.name} vs {other.chart.name}")
        if other.degree != self.degree:
            raise DegreeError(f"cannot add degree {self.degree} and {other.degree}")
        return other

    def __add__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return self._new(self.degree, terms)

    def __neg__(self):
        return self._new(self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, _Sparse):
            return NotImplemented
        s = sp.sympify(scalar)
        return self._new(self.degree, {k: s * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        return (self.chart == other.chart and self.degree == other.degree
                and self.terms == other.terms)

    def __hash__(self):
        return hash((type(self).__name__, self.chart, self.degree, tuple(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def coefficient(self, indices: Iterable[int]) -> sp.Expr:
        """Coefficient at an arbitrary (possibly unsorted) 0-based index sequence."""
        idx = tuple(indices)
        sign = permutation_sign(idx)
        if sign == 0:
            return sp.Integer(0)
        return sign * self.terms.get(tuple(sorted(idx)), sp.Integer(0))

    def zero_test(self) -> ZeroTest:
        return ZeroTest.combine(is_zero(c) for c in self.terms.values())

    def map_coefficients(self, fn):
        return self._new(self.degree, {k: fn(v) for k, v in self.terms.items()})

    def subs(self, mapping: Mapping) -> "_Sparse":
        return self.map_coefficients(lambda c: c.xreplace(mapping))

    def at(self, point: Mapping) -> dict[Index, sp.Expr]:
        return {k: v.xreplace(point) for k, v in self.terms.items()}

    def _basis_text(self, idx: Index) -> str:
        raise NotImplementedError

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        out = ""
        for idx, c in self.terms.items():
            negative = c.could_extract_minus_sign()
            if negative:
                c = -c
            basis = self._basis_text(idx)
            if not basis:
                body = _print(c, _PREC_MUL) if negative else to_text(c)
            elif c == 1:
                body = basis
            else:
                body = f"{_print(c, _PREC_MUL)}*{basis}"
            if not out:
                out = "-" + body if negative else body
            else:
                out += (" - " if negative else " + ") + body
        return out

    def records(self) -> list[dict]:
        """Serialization records with 1-based indices."""
        return [{"indices": [i + 1 for i in idx], "coeff": to_text(c)} for idx, c in self.terms.items()]

    def __repr__(self):
        return f"{type(self).__name__}<{self.chart.name}, deg {self.degree}>({self.to_text()})"


class DifferentialForm(_Sparse):
    __slots__ = ()
    kind = "form"

    def _basis_text(self, idx: Index) -> str:
        return "^".join("d" + self.chart.coords[i] for i in idx)

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "DifferentialForm":
        return cls(chart, degree)

    @classmethod
    def scalar(cls, chart: Chart, f) -> "DifferentialForm":
        return cls(chart, 0, {(): f})

    @classmethod
    def basis(cls, chart: Chart, *coords: str) -> "DifferentialForm":
        """``d c1 ^ d c2 ^ ...`` for coordinate names in any order."""
        idx = [chart.index(c) for c in coords]
        sign = permutation_sign(idx)
        return cls(chart, len(idx), {tuple(sorted(idx)): sign} if sign else {})

    @classmethod
    def from_records(cls, chart: Chart, degree: int, records: Iterable[Mapping]) -> "DifferentialForm":
        """Inverse of :meth:`records`; indices may be unsorted and repeat keys add."""
        from .symexpr import parse

        out = cls(chart, degree)
        for rec in records:
            idx = [int(i) - 1 for i in rec["indices"]]
            coeff = rec["coeff"]
            c = parse(coeff, chart) if isinstance(coeff, str) else sp.sympify(coeff)
            sign = permutation_sign(idx)
            if len(idx) != degree:
                raise DegreeError(f"record {rec} does not have degree {degree}")
            if sign:
                out = out + cls(chart, degree, {tuple(sorted(idx)): sign * c})
        return out

    def __xor__(self, other):
        return wedge(self, other)

    def d(self) -> "DifferentialForm":
        return exterior_derivative(self)


class MultivectorField(_Sparse):
    __slots__ = ()
    kind = "multivector"

    def __init__(self, chart, degree, terms=None, *, check=True):
        super().__init__(chart, degree, terms, check=check)

    def _basis_text(self, idx: Index) -> str:
        return "^".join("D" + self.chart.coords[i] for i in idx)

    @classmethod
    def vector(cls, chart: Chart, components) -> "MultivectorField":
        """Degree-1 field from a sequence of components or a ``{name: expr}`` map."""
        if isinstance(components, Mapping):
            terms = {(chart.index(k),): v for k, v in components.items()}
        else:
            comps = list(components)
            if len(comps) != chart.dim:
                raise ValueError(f"expected {chart.dim} components, got {len(comps)}")
            terms = {(i,): c for i, c in enumerate(comps)}
        return cls(chart, 1, terms)

    @classmethod
    def basis(cls, chart: Chart, *coords: str) -> "MultivectorField":
        idx = [chart.index(c) for c in coords]
        sign = permutation_sign(idx)
        return cls(chart, len(idx), {tuple(sorted(idx)): sign} if sign else {})

    @classmethod
    def from_records(cls, chart: Chart, degree: int, records: Iterable[Mapping]) -> "MultivectorField":
        from .symexpr import parse

        terms: dict[Index, sp.Expr] = {}
        for rec in records:
            idx = [int(i) - 1 for i in rec["indices"]]
            coeff = rec["coeff"]
            c = parse(coeff, chart) if isinstance(coeff, str) else sp.sympify(coeff)
            sign = permutation_sign(idx)
            if sign:
                key = tuple(sorted(idx))
                terms[key] = terms.get(key, 0) + sign * c
        return cls(chart, degree, terms)

    def components(self) -> list[sp.Expr]:
        if self.degree != 1:
            raise DegreeError("components() needs a vector field")
        return [self.terms.get((i,), sp.Integer(0)) for i in range(self.chart.dim)]

    def apply(self, f) -> sp.Expr:
        """Directional derivative X(f) for a degree-1 field."""
        f = sp.sympify(f)
        if self.degree != 1:
            raise DegreeError("only vector fields act on functions")
        return normalize(sum((c * sp.diff(f, self.chart.symbols[i[0]]) for i, c in self.terms.items()),
                             sp.Integer(0)))

    def bracket(self, other: "MultivectorField") -> "MultivectorField":
        return lie_bracket(self, other)

    def __xor__(self, other):
        return wedge_multivectors(self, other)


# ------------------------------------------------------------------ operations

def _check_chart(a: _Sparse, b: _Sparse):
    if a.chart != b.chart:
        raise ChartMismatch(f"{a.chart.name} vs {b.chart.name}")


def wedge(alpha: DifferentialForm, beta: DifferentialForm) -> DifferentialForm:
    _check_chart(alpha, beta)
    degree = alpha.degree + beta.degree
    terms: dict[Index, sp.Expr] = {}
    if degree <= alpha.chart.dim:
        for i, a in alpha.terms.items():
            for j, b in beta.terms.items():
                sign, k = merge_sign(i, j)
                if sign:
                    terms[k] = terms.get(k, 0) + sign * a * b
    return DifferentialForm(alpha.chart, degree, terms, check=False)


def wedge_multivectors(x: MultivectorField, y: MultivectorField) -> MultivectorField:
    _check_chart(x, y)
    terms: dict[Index, sp.Expr] = {}
    for i, a in x.terms.items():
        for j, b in y.terms.items():
            sign, k = merge_sign(i, j)
            if sign:
                terms[k] = terms.get(k, 0) + sign * a * b
    return MultivectorField(x.chart, x.degree + y.degree, terms, check=False)


def exterior_derivative(alpha: DifferentialForm) -> DifferentialForm:
    chart = alpha.chart
    terms: dict[Index, sp.Expr] = {}
    if alpha.degree < chart.dim:
        gens = chart.symbols
        for idx, c in alpha.terms.items():
            poly = as_polynomial(c, gens)
            for i, s in enumerate(gens):
                if i in idx or not c.has(s):
                    continue
                sign, k = merge_sign((i,), idx)
                partial = sp.diff(c, s) if poly is None else poly.diff(poly.ring.gens[i]).as_expr()
                terms[k] = terms.get(k, 0) + sign * partial
    return DifferentialForm(chart, alpha.degree + 1, terms, check=False)


def _contract_basis(i: int, idx: Index) -> tuple[int, Index]:
    """i(d/dx_i) applied to dx^idx."""
    if i not in idx:
        return 0, ()
    pos = idx.index(i)
    return (-1 if pos % 2 else 1), idx[:pos] + idx[pos + 1:]


def interior_product(x: MultivectorField, alpha: DifferentialForm) -> DifferentialForm:
    """Contraction i(X)alpha; for X = X1^...^Xr this is i(X1)...i(Xr)alpha."""
    _check_chart(x, alpha)
    if x.degree > alpha.degree:
        raise DegreeError(f"cannot contract degree-{x.degree} field into degree-{alpha.degree} form")
    terms: dict[Index, sp.Expr] = {}
    for vi, vc in x.terms.items():
        for fi, fc in alpha.terms.items():
            sign, rest = 1, fi
            for i in reversed(vi):
                s, rest = _contract_basis(i, rest)
                sign *= s
                if not sign:
                    break
            if sign:
                terms[rest] = terms.get(rest, 0) + sign * vc * fc
    return DifferentialForm(alpha.chart, alpha.degree - x.degree, terms, check=False)


def lie_derivative(x: MultivectorField, alpha: DifferentialForm) -> DifferentialForm:
    """Cartan formula L(X) = i(X) d + d i(X), for vector fields only."""
    if x.degree != 1:
        raise DegreeError("Lie derivative is only defined for degree-1 fields")
    _check_chart(x, alpha)
    out = interior_product(x, exterior_derivative(alpha))
    if alpha.degree >= 1:
        out = out + exterior_derivative(interior_product(x, alpha))
    return out


def lie_bracket(x: MultivectorField, y: MultivectorField) -> MultivectorField:
    """Coordinate bracket [X, Y] = X(Y^i) - Y(X^i) of two vector fields."""
    _check_chart(x, y)
    if x.degree != 1 or y.degree != 1:
        raise DegreeError("bracket is provided for vector fields only")
    xs, ys = x.components(), y.components()
    comps = [x.apply(ys[i]) - y.apply(xs[i]) for i in range(x.chart.dim)]
    return MultivectorField.vector(x.chart, comps)


# ----------------------------------------------------------------------- maps

class SmoothMap:
    """Coordinate expression of a map: one component per target coordinate."""

    __slots__ = ("source", "target", "components")

    def __init__(self, source: Chart, target: Chart, components: Sequence):
        comps = tuple(normalize(sp.sympify(c)) for c in components)
        if len(comps) != target.dim:
            raise ValueError(f"map into {target.name} needs {target.dim} components, got {len(comps)}")
        for c in comps:
            source.check(c)
        self.source = source
        self.target = target
        self.components = comps

    @classmethod
    def identity(cls, chart: Chart) -> "SmoothMap":
        return cls(chart, chart, chart.symbols)

    @property
    def substitution(self) -> dict[sp.Symbol, sp.Expr]:
        return dict(zip(self.target.symbols, self.components))

    def pull_expr(self, e) -> sp.Expr:
        """Compose a target-chart expression with this map."""
        return normalize(sp.sympify(e).xreplace(self.substitution))

    def jacobian(self) -> list[list[sp.Expr]]:
        """Rows indexed by target coordinates, columns by source coordinates."""
        return [[normalize(sp.diff(c, s)) for s in self.source.symbols] for c in self.components]

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """``self o inner``."""
        if inner.target != self.source:
            raise ChartMismatch(f"cannot compose {self.source.name} after {inner.target.name}")
        return SmoothMap(inner.source, self.target, [inner.pull_expr(c) for c in self.components])

    def at(self, point: Mapping) -> tuple[sp.Expr, ...]:
        return tuple(c.xreplace(point) for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, SmoothMap):
            return NotImplemented
        return (self.source, self.target, self.components) == (other.source, other.target, other.components)

    def __hash__(self):
        return hash((self.source, self.target, self.components))

    def __repr__(self):
        body = ", ".join(to_text(c) for c in self.components)
        return f"SmoothMap<{self.source.name}->{self.target.name}>({body})"


def pullback(f: SmoothMap, alpha: DifferentialForm) -> DifferentialForm:
    if alpha.chart != f.target:
        raise ChartMismatch(f"form lives on {alpha.chart.name}, map targets {f.target.name}")
    src = f.source
    if alpha.degree > src.dim:
        return DifferentialForm(src, alpha.degree)
    jac = f.jacobian()
    sub = f.substitution
    p = alpha.degree
    poly_jac = [[as_polynomial(e, src.symbols) for e in row] for row in jac]
    polynomial = all(e is not None for row in poly_jac for e in row)
    terms: dict[Index, sp.Expr] = {}
    for idx, c in alpha.terms.items():
        pulled = c.xreplace(sub)
        pulled_poly = as_polynomial(pulled, src.symbols) if polynomial else None
        if pulled_poly is not None:
            for cols, minor in _all_minors([poly_jac[r] for r in idx], src.dim, pulled_poly.ring).items():
                if minor:
                    terms[cols] = terms.get(cols, 0) + (pulled_poly * minor).as_expr()
            continue
        for cols in combinations(range(src.dim), p):
            if p == 0:
                minor = sp.Integer(1)
            else:
                minor = sp.Matrix([[jac[r][col] for col in cols] for r in idx]).det(method="berkowitz")
            if minor != 0:
                terms[cols] = terms.get(cols, 0) + pulled * minor
    return DifferentialForm(src, p, terms, check=False)


def _all_minors(rows, ncols: int, ring) -> dict[Index, object]:
    """Every maximal minor of ``rows`` (ring elements), by Laplace expansion along the last row."""
    minors = {(): ring.one}
    for t, row in enumerate(rows):
        nxt = {}
        for cols in combinations(range(ncols), t + 1):
            total = ring.zero
            for pos, j in enumerate(cols):
                entry = row[j]
                if not entry:
                    continue
                sub = minors[cols[:pos] + cols[pos + 1:]]
                if sub:
                    total += entry * sub if (t + pos) % 2 == 0 else -(entry * sub)
            nxt[cols] = total
        minors = nxt
    return minors


def pullback_vector_field(phi: SmoothMap, x: MultivectorField) -> MultivectorField:
    """(phi^* X)(p) = Dphi(p)^{-1} X(phi(p)) for a local diffeomorphism of a chart."""
    if phi.source != phi.target or x.chart != phi.target:
        raise ChartMismatch("vector-field pullback needs a self-map of the field's chart")
    rhs = [phi.pull_expr(c) for c in x.components()]
    sol = linalg.solve(phi.jacobian(), rhs)
    if sol.rank < phi.source.dim or sol.values is None:
        raise Undecided("Jacobian of the map is not certified invertible")
    return MultivectorField.vector(phi.source, sol.values)


def evaluate_form(alpha: DifferentialForm, vectors: Sequence[Sequence]) -> sp.Expr:
    """alpha(v1, ..., vp) with vectors given by their component lists."""
    if len(vectors) != alpha.degree:
        raise DegreeError("wrong number of vectors")
    total = sp.Integer(0)
    for idx, c in alpha.terms.items():
        if alpha.degree == 0:
            total += c
            continue
        total += c * sp.Matrix([[v[i] for v in vectors] for i in idx]).det(method="berkowitz")
    return total
