"""Lie-algebra actions on a multisymplectic chart and their (co)momentum maps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from .errors import (
    DegreeError,
    InvariantViolation,
    MissingSamples,
    NotClosed,
    NotStronglyHamiltonian,
    Undecided,
)
from .exterior import (
    DifferentialForm,
    MultivectorField,
    SmoothMap,
    exterior_derivative,
    interior_product,
    lie_bracket,
    lie_derivative,
    pullback,
    pullback_vector_field,
)
from .msgeom import MultisymplecticStructure, bracket_of_fields
from .symexpr import ZeroTest


@dataclass(frozen=True)
class GroupSample:
    """A finite group element: its map on the chart and its adjoint matrix.

    ``ad[j][i]`` is the j-th coordinate of Ad_g(xi_i) in the algebra basis.
    """

    name: str
    phi: SmoothMap
    ad: tuple[tuple[sp.Rational, ...], ...]


def _rational_matrix(rows) -> tuple[tuple[sp.Rational, ...], ...]:
    return tuple(tuple(sp.Rational(x) for x in row) for row in rows)


@dataclass(eq=False)
class LieAlgebraAction:
    ms: MultisymplecticStructure
    generators: list[MultivectorField]
    structure_constants: dict[tuple[int, int, int], sp.Rational] = field(default_factory=dict)
    sigma: int = -1
    samples: list[GroupSample] = field(default_factory=list)
    names: list[str] | None = None

    def __post_init__(self):
        chart = self.ms.chart
        for g in self.generators:
            if g.chart != chart or g.degree != 1:
                raise DegreeError("generators must be vector fields on the structure's chart")
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        n = len(self.generators)
        consts = {}
        for (i, j, l), v in self.structure_constants.items():
            if not (0 <= i < n and 0 <= j < n and 0 <= l < n):
                raise ValueError(f"structure constant index {(i, j, l)} out of range")
            v = sp.Rational(v)
            if v != 0:
                consts[(i, j, l)] = v
        # fill in the antisymmetric partners that were left implicit
        for (i, j, l), v in list(consts.items()):
            partner = consts.get((j, i, l))
            if partner is None:
                consts[(j, i, l)] = -v
            elif partner != -v:
                raise InvariantViolation(f"c^{l}_{i}{j} = {v} but c^{l}_{j}{i} = {partner}")
        self.structure_constants = consts
        self.samples = [GroupSample(s.name, s.phi, _rational_matrix(s.ad)) for s in self.samples]
        if self.names is None:
            self.names = [f"xi{i + 1}" for i in range(n)]
        jac = self.jacobi_defect()
        if jac:
            raise InvariantViolation(f"structure constants violate the Jacobi identity at {jac[0]}")
        closure = self.bracket_closure()
        for (i, j), verdict in closure.items():
            if verdict is ZeroTest.NONZERO:
                raise InvariantViolation(
                    f"[{self.names[i]}, {self.names[j]}] does not match sigma * c^l_ij xi_l")

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def chart(self):
        return self.ms.chart

    def c(self, i: int, j: int, l: int) -> sp.Rational:
        return self.structure_constants.get((i, j, l), sp.Integer(0))

    def bracket_coefficients(self, i: int, j: int) -> list[sp.Rational]:
        """Coefficients of [xi~_i, xi~_j] = sigma * sum_l c^l_ij xi~_l."""
        return [self.sigma * self.c(i, j, l) for l in range(self.n)]

    def field_combination(self, coeffs: Sequence) -> MultivectorField:
        out = MultivectorField(self.chart, 1)
        for a, g in zip(coeffs, self.generators):
            if a != 0:
                out = out + a * g
        return out

    def jacobi_defect(self) -> list[tuple[int, int, int, int]]:
        n = self.n
        bad = []
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for m in range(n):
                        total = sum(self.c(i, j, l) * self.c(l, k, m) + self.c(j, k, l) * self.c(l, i, m)
                                    + self.c(k, i, l) * self.c(l, j, m) for l in range(n))
                        if total != 0:
                            bad.append((i, j, k, m))
        return bad

    def bracket_closure(self) -> dict[tuple[int, int], ZeroTest]:
        out = {}
        for i in range(self.n):
            for j in range(i + 1, self.n):
                diff = lie_bracket(self.generators[i], self.generators[j]) - self.field_combination(
                    self.bracket_coefficients(i, j))
                out[(i, j)] = diff.zero_test()
        return out


def lincomb(coeffs: Sequence, forms: Sequence[DifferentialForm], chart, degree: int) -> DifferentialForm:
    out = DifferentialForm(chart, degree)
    for a, f in zip(coeffs, forms):
        if a != 0:
            out = out + a * f
    return out


# ---------------------------------------------------------------- antiderivative

def poincare_antiderivative(alpha: DifferentialForm, base_point: Sequence | None = None) -> DifferentialForm:
    """Radial homotopy operator on a star-shaped chart.

    K(alpha)(x) = int_0^1 t^(p-1) i(E) alpha(x0 + t (x - x0)) dt, with E the
    Euler field centred at ``base_point`` (origin by default). Coefficients
    must become polynomial in t; anything else raises :class:`Undecided`.
    """
    chart = alpha.chart
    p = alpha.degree
    if p == 0:
        raise DegreeError("a 0-form has no antiderivative")
    closed = exterior_derivative(alpha).zero_test()
    if closed is ZeroTest.NONZERO:
        raise NotClosed("form is not closed")
    if closed is ZeroTest.UNDECIDED:
        raise Undecided("closedness of the form could not be decided")
    x0 = [sp.Rational(v) for v in base_point] if base_point is not None else [sp.Integer(0)] * chart.dim
    t = sp.Dummy("t")
    xs = chart.symbols
    radial = {s: x0[i] + t * (s - x0[i]) for i, s in enumerate(xs)}
    terms: dict[tuple[int, ...], sp.Expr] = {}
    for idx, c in alpha.terms.items():
        integrand = sp.expand(c.xreplace(radial) * t ** (p - 1))
        if not integrand.is_polynomial(t):
            raise Undecided(f"radial integral of {c} is not polynomial in t")
        poly = sp.Poly(integrand, t)
        integral = sum((a / (n + 1) for (n,), a in poly.terms()), sp.Integer(0))
        for pos, j in enumerate(idx):
            rest = idx[:pos] + idx[pos + 1:]
            sign = -1 if pos % 2 else 1
            terms[rest] = terms.get(rest, 0) + sign * (xs[j] - x0[j]) * integral
    beta = DifferentialForm(chart, p - 1, terms)
    check = (exterior_derivative(beta) - alpha).zero_test()
    if check is not ZeroTest.ZERO:
        raise Undecided("could not certify d(K alpha) = alpha")
    return beta


# ------------------------------------------------------------- classification

@dataclass
class GeneratorReport:
    index: int
    name: str
    locally_hamiltonian: ZeroTest  # d(i(xi)Omega)
    lie_criterion: ZeroTest  # L(xi)Omega
    theta_invariant: ZeroTest | None  # L(xi)theta, None without a potential
    hamiltonian_form: DifferentialForm | None
    source: str | None  # "theta", "homotopy" or None
    certified: ZeroTest | None

    @property
    def criteria_agree(self) -> bool:
        return self.locally_hamiltonian is self.lie_criterion


@dataclass
class ActionClassification:
    generators: list[GeneratorReport]
    multisymplectic: ZeroTest
    locally_hamiltonian: ZeroTest
    strongly_hamiltonian: ZeroTest
    exact: ZeroTest
    note: str = ("multisymplectic and locally Hamiltonian coincide for the infinitesimal "
                 "action: both mean L(xi)Omega = 0 for every generator")


def classify_action(a: LieAlgebraAction, base_point: Sequence | None = None) -> ActionClassification:
    ms = a.ms
    reports = []
    for i, g in enumerate(a.generators):
        contraction = interior_product(g, ms.omega)
        loc = exterior_derivative(contraction).zero_test()
        lie = lie_derivative(g, ms.omega).zero_test()
        theta_inv = lie_derivative(g, ms.theta).zero_test() if ms.theta is not None else None
        zeta, source, cert = None, None, None
        if theta_inv is ZeroTest.ZERO:
            zeta, source = -interior_product(g, ms.theta), "theta"
        elif loc is ZeroTest.ZERO and ms.k >= 1:
            try:
                zeta, source = poincare_antiderivative(contraction, base_point), "homotopy"
            except Undecided:
                pass
        if zeta is not None:
            cert = (exterior_derivative(zeta) - contraction).zero_test()
        reports.append(GeneratorReport(i, a.names[i], loc, lie, theta_inv, zeta, source, cert))

    loc_all = ZeroTest.combine(r.locally_hamiltonian for r in reports)

    def strong(r):
        if r.certified is ZeroTest.ZERO:
            return ZeroTest.ZERO
        return ZeroTest.NONZERO if r.locally_hamiltonian is ZeroTest.NONZERO else ZeroTest.UNDECIDED

    strongly = ZeroTest.combine(strong(r) for r in reports)
    if ms.theta is None:
        exact = ZeroTest.NONZERO if reports else ZeroTest.ZERO
    else:
        exact = ZeroTest.combine(r.theta_invariant for r in reports)
    multi = ZeroTest.combine(r.lie_criterion for r in reports)
    return ActionClassification(reports, multi, loc_all, strongly, exact)


# ------------------------------------------------------------ comomentum maps

@dataclass
class ComomentumMap:
    """Assignment xi_i -> zeta_i, extended linearly."""

    action: LieAlgebraAction
    forms: list[DifferentialForm]
    sources: list[str]
    certificates: list[ZeroTest]

    def __call__(self, coeffs: Sequence) -> DifferentialForm:
        return lincomb(coeffs, self.forms, self.action.chart, self.action.ms.k - 1)

    def momentum(self, point: dict) -> list[dict]:
        """J(x)(xi_i) for each basis element: the coefficients of zeta_i at x."""
        return [f.at(point) for f in self.forms]

    def recertify(self) -> list[ZeroTest]:
        ms = self.action.ms
        return [(exterior_derivative(z) - interior_product(g, ms.omega)).zero_test()
                for z, g in zip(self.forms, self.action.generators)]

    def perturbed(self, closed_forms: Sequence[DifferentialForm]) -> "ComomentumMap":
        """J* + F for a closed-form valued linear map F given on the basis."""
        if len(closed_forms) != len(self.forms):
            raise ValueError("one closed form per generator is required")
        for f in closed_forms:
            if exterior_derivative(f).zero_test() is not ZeroTest.ZERO:
                raise NotClosed(f"perturbation {f.to_text()} is not certified closed")
        forms = [z + f for z, f in zip(self.forms, closed_forms)]
        new = ComomentumMap(self.action, forms, [s + "+closed" for s in self.sources], [])
        new.certificates = new.recertify()
        return new


def build_comomentum(a: LieAlgebraAction, base_point: Sequence | None = None) -> ComomentumMap:
    cls = classify_action(a, base_point)
    if cls.strongly_hamiltonian is not ZeroTest.ZERO:
        raise NotStronglyHamiltonian("some generator has no certified Hamiltonian form")
    ms = a.ms
    if cls.exact is ZeroTest.ZERO and ms.theta is not None:
        forms = [-interior_product(g, ms.theta) for g in a.generators]
        sources = ["theta"] * a.n
    else:
        forms, sources = [], []
        for r, g in zip(cls.generators, a.generators):
            try:
                forms.append(poincare_antiderivative(interior_product(g, ms.omega), base_point))
                sources.append("homotopy")
            except Undecided:
                forms.append(r.hamiltonian_form)
                sources.append(r.source)
    j = ComomentumMap(a, forms, sources, [])
    j.certificates = j.recertify()
    if any(c is not ZeroTest.ZERO for c in j.certificates):
        raise Undecided("comomentum equation could not be certified for every generator")
    return j


# -------------------------------------------------------------- Poisson defect

@dataclass
class DefectReport:
    gamma: dict[tuple[int, int], DifferentialForm]  # {z_i, z_j} - zeta_[j,i]
    gamma_other_order: dict[tuple[int, int], DifferentialForm]  # {z_i, z_j} - zeta_[i,j]
    closed: dict[tuple[int, int], ZeroTest]
    antisymmetric: ZeroTest
    homomorphism: ZeroTest  # this comomentum map: all gamma vanish
    homomorphism_other_order: ZeroTest
    poissonian: ZeroTest  # the action: some comomentum map is a homomorphism
    correction: list[DifferentialForm] | None  # closed F with (J* + F) a homomorphism


def poissonian_defect(a: LieAlgebraAction, j: ComomentumMap) -> DefectReport:
    ms = a.ms
    n = a.n
    deg = ms.k - 1
    gens = a.generators
    gamma, other, closed = {}, {}, {}
    for i in range(n):
        for k in range(n):
            br = bracket_of_fields(ms, gens[i], gens[k])
            g = br - j(a.bracket_coefficients(k, i))
            gamma[(i, k)] = g
            other[(i, k)] = br - j(a.bracket_coefficients(i, k))
            closed[(i, k)] = exterior_derivative(g).zero_test()
    antisym = ZeroTest.combine((gamma[(i, k)] + gamma[(k, i)]).zero_test()
                               for i in range(n) for k in range(i + 1, n))
    hom = ZeroTest.combine(g.zero_test() for g in gamma.values())
    hom_other = ZeroTest.combine(g.zero_test() for g in other.values())
    poissonian, correction = _coboundary(a, gamma, deg)
    if hom is ZeroTest.ZERO:
        poissonian = ZeroTest.ZERO
    return DefectReport(gamma, other, closed, antisym, hom, hom_other, poissonian, correction)


def _coboundary(a: LieAlgebraAction, gamma, deg):
    """Look for F with gamma_ij = sum_l sigma c^l_ji F_l; F is then closed automatically."""
    n = a.n
    pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
    if not pairs:
        return ZeroTest.ZERO, [DifferentialForm(a.chart, deg) for _ in range(n)]
    m = sp.Matrix([[a.sigma * a.c(k, i, l) for l in range(n)] for i, k in pairs])
    aug = m.row_join(sp.eye(len(pairs)))
    rref, pivots = aug.rref()
    pivots = [p for p in pivots if p < n]
    transformed = [lincomb(list(rref[r, n:]), [gamma[p] for p in pairs], a.chart, deg)
                   for r in range(len(pairs))]
    verdicts = [transformed[r].zero_test() for r in range(len(pivots), len(pairs))]
    consistent = ZeroTest.combine(verdicts)
    if consistent is not ZeroTest.ZERO:
        return consistent if consistent is ZeroTest.UNDECIDED else ZeroTest.NONZERO, None
    correction = [DifferentialForm(a.chart, deg) for _ in range(n)]
    for r, col in enumerate(pivots):
        correction[col] = transformed[r]
    return ZeroTest.ZERO, correction


# ---------------------------------------------------------------- equivariance

@dataclass
class SampleEquivariance:
    sample: str
    preserves_omega: ZeroTest
    ad_consistent: ZeroTest | None
    identity: list[ZeroTest] | None  # J*(Ad_g xi_i) - Phi_g^* J*(xi_i), per i
    printed_sign_identity: list[ZeroTest] | None  # J*(Ad_g xi_i) + Phi_g^* J*(xi_i), per i
    defects: list[DifferentialForm] | None

    @property
    def precondition_failed(self) -> bool:
        return self.preserves_omega is not ZeroTest.ZERO

    @property
    def verdict(self) -> ZeroTest:
        if self.precondition_failed:
            return ZeroTest.NONZERO if self.preserves_omega is ZeroTest.NONZERO else ZeroTest.UNDECIDED
        return ZeroTest.combine(self.identity)


@dataclass
class EquivarianceReport:
    samples: list[SampleEquivariance]
    this_map: ZeroTest
    action: ZeroTest  # some comomentum map is equivariant on the samples
    witness: str | None


def _sample_check(a: LieAlgebraAction, j: ComomentumMap, s: GroupSample) -> SampleEquivariance:
    ms = a.ms
    pres = (pullback(s.phi, ms.omega) - ms.omega).zero_test()
    if pres is not ZeroTest.ZERO:
        return SampleEquivariance(s.name, pres, None, None, None, None)
    ad_checks = []
    for i, g in enumerate(a.generators):
        col = [s.ad[r][i] for r in range(a.n)]
        try:
            pulled = pullback_vector_field(s.phi, g)
            ad_checks.append((a.field_combination(col) - pulled).zero_test())
        except Undecided:
            ad_checks.append(ZeroTest.UNDECIDED)
    identity, printed, defects = [], [], []
    for i in range(a.n):
        col = [s.ad[r][i] for r in range(a.n)]
        lhs = j(col)
        rhs = pullback(s.phi, j.forms[i])
        defects.append(lhs - rhs)
        identity.append((lhs - rhs).zero_test())
        printed.append((lhs + rhs).zero_test())
    return SampleEquivariance(s.name, pres, ZeroTest.combine(ad_checks), identity, printed, defects)


def check_equivariance(a: LieAlgebraAction, j: ComomentumMap) -> EquivarianceReport:
    """Check J*(Ad_g xi) = Phi_g^* J*(xi) on every supplied group sample."""
    if not a.samples:
        raise MissingSamples("the action carries no group samples")
    reports = [_sample_check(a, j, s) for s in a.samples]
    this_map = ZeroTest.combine(r.verdict for r in reports)
    if this_map is ZeroTest.ZERO or any(r.precondition_failed for r in reports):
        return EquivarianceReport(reports, this_map, this_map, "this map" if this_map is ZeroTest.ZERO else None)
    action_verdict, witness = _equivariant_witness(a, reports)
    return EquivarianceReport(reports, this_map, action_verdict, witness)


def _equivariant_witness(a: LieAlgebraAction, reports: list[SampleEquivariance]):
    ms = a.ms
    if ms.theta is not None and all(
            lie_derivative(g, ms.theta).zero_test() is ZeroTest.ZERO for g in a.generators):
        exact = ComomentumMap(a, [-interior_product(g, ms.theta) for g in a.generators],
                              ["theta"] * a.n, [])
        if all(_sample_check(a, exact, s).verdict is ZeroTest.ZERO for s in a.samples):
            return ZeroTest.ZERO, "theta comomentum"
    if ms.k != 1:
        return ZeroTest.UNDECIDED, None
    # k = 1: closed 0-forms on a connected chart are constants; solve for them.
    rows, rhs = [], []
    for r, s in zip(reports, a.samples):
        for i, d in enumerate(r.defects):
            value = d.terms.get((), sp.Integer(0))
            if value.free_symbols:
                # a non-constant defect cannot be removed by a constant shift
                verdict = exterior_derivative(d).zero_test()
                return (ZeroTest.NONZERO if verdict is ZeroTest.NONZERO else ZeroTest.UNDECIDED), None
            # sum_j Ad_ji F_j - F_i = -defect_i
            rows.append([s.ad[jj][i] - (1 if jj == i else 0) for jj in range(a.n)])
            rhs.append(-value)
    m = sp.Matrix(rows)
    try:
        sol, params = m.gauss_jordan_solve(sp.Matrix(rhs))
    except ValueError:
        return ZeroTest.NONZERO, None
    return ZeroTest.ZERO, "constant shift " + str(list(sol.subs({p: 0 for p in params})))
