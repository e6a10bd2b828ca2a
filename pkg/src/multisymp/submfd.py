"""Momentum-type submanifolds, dimension classification and reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import sympy as sp

from . import linalg
from .action import LieAlgebraAction
from .errors import DomainError, NotBasic, NotMomentumType, SectionMismatch
from .exterior import (
    DifferentialForm,
    MultivectorField,
    SmoothMap,
    evaluate_form,
    exterior_derivative,
    interior_product,
    lie_derivative,
    pullback,
)
from .symexpr import Chart, ZeroTest, current_settings, is_zero, sample_points


# ---------------------------------------------------------------- dimensions

@dataclass(frozen=True)
class DimensionClass:
    admissible: bool
    optimal_s: int | None  # None when no dimension is admissible
    maximal: bool
    bound: int  # C(m,k) - n


def classify_dimension(m: int, k: int, n: int, s: int) -> DimensionClass:
    """Binomial condition C(s,k) <= C(m,k) - n on the dimension of S.

    ``optimal_s`` is the largest q in [0, m] satisfying it; ``maximal``
    is the equality case C(s,k) = C(m,k) - n.
    """
    if not (1 <= k + 1 <= m):
        raise DomainError(f"need 1 <= k+1 <= m, got k={k}, m={m}")
    if n < 0:
        raise DomainError("n must be non-negative")
    if not (0 <= s <= m):
        raise DomainError(f"need 0 <= s <= m, got s={s}")
    bound = comb(m, k) - n
    admissible = comb(s, k) <= bound
    optimal = None
    for q in range(m, -1, -1):
        if comb(q, k) <= bound:
            optimal = q
            break
    return DimensionClass(admissible, optimal, comb(s, k) == bound, bound)


# --------------------------------------------------------------- submanifolds

@dataclass(eq=False)
class Submanifold:
    embedding: SmoothMap
    immersion_points: list[dict] = field(init=False, default_factory=list)

    def __post_init__(self):
        src = self.embedding.source
        jac = self.embedding.jacobian()
        pts = sample_points(src.symbols, current_settings().rank_samples, salt=3)
        good = []
        for pt in pts:
            at = linalg.substitute(jac, pt)
            if any(x.has(sp.zoo, sp.nan) for row in at for x in row):
                continue
            if linalg.rank(at)[0] == src.dim:
                good.append(pt)
        if not good:
            raise DomainError("embedding is not an immersion at any sample point")
        self.immersion_points = good

    @property
    def source(self) -> Chart:
        return self.embedding.source

    @property
    def ambient(self) -> Chart:
        return self.embedding.target

    @property
    def dim(self) -> int:
        return self.source.dim


def induced_field(sub: Submanifold, x: MultivectorField) -> tuple[ZeroTest, MultivectorField | None]:
    """Solve j_* X_S = X|_S. Returns (tangency verdict, X_S or None)."""
    rhs = [sub.embedding.pull_expr(c) for c in x.components()]
    sol = linalg.solve(sub.embedding.jacobian(), rhs)
    if sol.consistent is not ZeroTest.ZERO:
        return sol.consistent, None
    return ZeroTest.ZERO, MultivectorField.vector(sub.source, sol.values)


@dataclass
class MomentumTypeReport:
    integral: ZeroTest  # every j_S^* i(xi)Omega vanishes
    per_generator: list[ZeroTest]
    pulled_contractions: list[DifferentialForm]
    isotropy: list[int]
    induced: dict[int, MultivectorField]
    tangency: list[ZeroTest]
    dimension: DimensionClass
    closed_by_construction: bool = True
    maximality: str = "not decided; see the dimension classification"

    @property
    def verdict(self) -> ZeroTest:
        return self.integral


def is_momentum_type(sub: Submanifold, a: LieAlgebraAction) -> MomentumTypeReport:
    omega = a.ms.omega
    pulled, verdicts = [], []
    for g in a.generators:
        form = pullback(sub.embedding, interior_product(g, omega))
        pulled.append(form)
        verdicts.append(form.zero_test())
    tang, induced, iso = [], {}, []
    for i, g in enumerate(a.generators):
        t, xs = induced_field(sub, g)
        tang.append(t)
        if xs is not None:
            iso.append(i)
            induced[i] = xs
    dims = classify_dimension(sub.ambient.dim, a.ms.k, a.n, sub.dim)
    return MomentumTypeReport(ZeroTest.combine(verdicts), verdicts, pulled, iso, induced, tang, dims)


@dataclass
class KernelReport:
    omega_s: DifferentialForm
    trivial_by_dimension: bool
    kernel_rank_at_samples: list[int]
    kernel_basis_at_samples: list[list[list[sp.Expr]]]
    isotropy_contained: ZeroTest
    points: list[dict]


def characteristic_kernel(sub: Submanifold, omega: DifferentialForm,
                          isotropy_fields: list[MultivectorField] = ()) -> KernelReport:
    """Pointwise kernel of X -> i(X)omega_S with omega_S = j_S^* Omega."""
    from .msgeom import contraction_matrix

    omega_s = pullback(sub.embedding, omega)
    trivial = sub.dim < omega.degree
    points = sub.immersion_points
    ranks, bases = [], []
    for pt in points:
        if trivial or not omega_s.terms:
            ranks.append(sub.dim)
            bases.append([[sp.Integer(int(i == j)) for i in range(sub.dim)] for j in range(sub.dim)])
            continue
        matrix, _ = contraction_matrix(omega_s)
        basis, _ = linalg.nullspace(linalg.substitute(matrix, pt))
        ranks.append(len(basis))
        bases.append(basis)
    contained = ZeroTest.combine(interior_product(v, omega_s).zero_test() for v in isotropy_fields)
    return KernelReport(omega_s, trivial, ranks, bases, contained, points)


# ---------------------------------------------------------------- EDS spans

@dataclass
class SpanReport:
    inclusion: ZeroTest
    span_dims: list[int]
    codimension_count: int  # C(m,k) - C(s,k)
    equality: ZeroTest
    violation: dict | None


def momentum_eds_span_check(sub: Submanifold, a: LieAlgebraAction) -> SpanReport:
    """Pointwise check that every i(xi)Omega kills all k-vectors tangent to S.

    Pairings are evaluated directly on wedges of Jacobian columns, which
    keeps this path independent of the pullback code.
    """
    m, s, k = sub.ambient.dim, sub.dim, a.ms.k
    if s < k:
        raise DomainError(f"need dim S >= k, got {s} < {k}")
    contractions = [interior_product(g, a.ms.omega) for g in a.generators]
    jac = sub.embedding.jacobian()
    cod = comb(m, k) - comb(s, k)
    verdicts, dims, violation = [], [], None
    rows_idx = list(combinations(range(m), k))
    for pt in sub.immersion_points:
        xpt = dict(zip(sub.ambient.symbols, sub.embedding.at(pt)))
        tangent = [[jac[r][c].xreplace(pt) for r in range(m)] for c in range(s)]
        for gi, alpha in enumerate(contractions):
            at = alpha.subs(xpt)
            for cols in combinations(range(s), k):
                val = evaluate_form(at, [tangent[c] for c in cols])
                t = is_zero(val)
                verdicts.append(t)
                if t is ZeroTest.NONZERO and violation is None:
                    violation = {"generator": gi, "tangent_directions": [sub.source.coords[c] for c in cols],
                                 "point": {str(kk): str(v) for kk, v in pt.items()}, "value": str(val)}
        vecs = [[alpha.subs(xpt).terms.get(idx, sp.Integer(0)) for idx in rows_idx] for alpha in contractions]
        dims.append(linalg.rank(vecs)[0] if vecs else 0)
    inclusion = ZeroTest.combine(verdicts)
    equality = ZeroTest.ZERO if all(d == cod for d in dims) else ZeroTest.NONZERO
    return SpanReport(inclusion, dims, cod, equality, violation)


# ------------------------------------------------------------------ reduction

@dataclass(eq=False)
class ReductionData:
    sub: Submanifold
    isotropy_generators: list[MultivectorField]  # ambient fields tangent to S
    projection: SmoothMap  # S -> quotient
    section: SmoothMap  # quotient -> S

    def __post_init__(self):
        if self.projection.source != self.sub.source or self.section.target != self.sub.source:
            raise SectionMismatch("projection/section charts do not match the submanifold")
        if self.section.source != self.projection.target:
            raise SectionMismatch("section must start on the quotient chart")

    @property
    def quotient(self) -> Chart:
        return self.projection.target


@dataclass
class ReductionReport:
    omega_s: DifferentialForm
    omega_tilde: DifferentialForm
    trivial_by_dimension: bool
    vertical: ZeroTest  # d pi (xi_S) = 0
    basic_certified: ZeroTest
    pullback_identity: ZeroTest
    closed: ZeroTest
    section_identity: ZeroTest
    submersion_points: int
    uniqueness: str


def reduce(rd: ReductionData, omega: DifferentialForm) -> ReductionReport:
    sub = rd.sub
    pi, sigma = rd.projection, rd.section
    # pi o sigma = id on the quotient
    comp = pi.compose(sigma)
    sec = ZeroTest.combine(is_zero(c - s) for c, s in zip(comp.components, rd.quotient.symbols))
    if sec is ZeroTest.NONZERO:
        raise SectionMismatch("projection o section is not the identity")
    omega_s = pullback(sub.embedding, omega)
    trivial = sub.dim < omega.degree
    vert, basic = [], []
    pjac = pi.jacobian()
    for idx, g in enumerate(rd.isotropy_generators):
        t, xs = induced_field(sub, g)
        if xs is None:
            raise NotMomentumType(f"isotropy generator {idx} is not tangent to S")
        comps = xs.components()
        push = [sum((row[c] * comps[c] for c in range(sub.dim)), sp.Integer(0)) for row in pjac]
        vert.append(ZeroTest.combine(is_zero(v) for v in push))
        contraction = interior_product(xs, omega_s) if omega_s.degree >= 1 else DifferentialForm(sub.source, 0)
        ci = contraction.zero_test()
        if ci is ZeroTest.NONZERO:
            raise NotBasic(idx, contraction.to_text())
        basic.append(ci)
        basic.append(lie_derivative(xs, omega_s).zero_test())
    basic_v = ZeroTest.combine(basic)
    if basic_v is ZeroTest.NONZERO:
        raise NotBasic(-1, "Lie derivative along a vertical field does not vanish")
    omega_tilde = pullback(sigma, omega_s)
    ident = (pullback(pi, omega_tilde) - omega_s).zero_test()
    closed = exterior_derivative(omega_tilde).zero_test()
    pts = sample_points(sub.source.symbols, current_settings().rank_samples, salt=4)
    full = sum(1 for pt in pts if linalg.rank(linalg.substitute(pjac, pt))[0] == rd.quotient.dim)
    uniq = ("unique: pi is a submersion at the sampled points, so pi^* is injective"
            if full else "uniqueness not established: no full-rank sample of d pi")
    return ReductionReport(omega_s, omega_tilde, trivial, ZeroTest.combine(vert), basic_v,
                           ident, closed, sec, full, uniq)


@dataclass
class PipelineReport:
    stage: str  # last stage reached
    momentum: MomentumTypeReport
    reduction: ReductionReport | None


def reduction_pipeline(rd: ReductionData, a: LieAlgebraAction) -> PipelineReport:
    """Momentum-type check first; reduction only runs when it passes."""
    mt = is_momentum_type(rd.sub, a)
    if mt.integral is not ZeroTest.ZERO:
        raise NotMomentumType(
            f"S is not an integral submanifold of the momentum system ({mt.integral.value})")
    return PipelineReport("reduce", mt, reduce(rd, a.ms.omega))
