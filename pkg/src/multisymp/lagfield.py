"""First-order Lagrangian field theory on a trivial bundle.

Jet coordinates are ``x^mu`` (base), ``u^a`` (fibre) and ``u^a_mu`` named
``f"{u}_{x}"``. The Poincare-Cartan form uses the convention

    Theta_L = sum_{a,mu} dL/du^a_mu (du^a - u^a_nu dx^nu) ^ i(d/dx^mu) vol + L vol,
    Omega_L = -d Theta_L,

with ``vol = dx^1 ^ ... ^ dx^k``. Since ``Omega_L = d(-Theta_L)``, the
exact-action comomentum ``-i(xi)(-Theta_L) = i(xi)Theta_L`` is the Noether
current. Euler-Lagrange residuals are ``dL/du^a - sum_mu D_mu dL/du^a_mu``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import sympy as sp

from .action import LieAlgebraAction
from .exterior import (
    DifferentialForm,
    MultivectorField,
    SmoothMap,
    exterior_derivative,
    interior_product,
    lie_derivative,
    pullback,
)
from .msgeom import MultisymplecticReport, MultisymplecticStructure, check_multisymplectic
from .submfd import DimensionClass, MomentumTypeReport, Submanifold, is_momentum_type
from .symexpr import Chart, ZeroTest, is_zero, normalize, parse, sample_points


@dataclass(eq=False)
class LagrangianSystem:
    base: tuple[str, ...]
    fiber: tuple[str, ...]
    lagrangian: sp.Expr | str
    jet: Chart = field(init=False)
    base_chart: Chart = field(init=False)

    def __post_init__(self):
        self.base = tuple(self.base)
        self.fiber = tuple(self.fiber)
        derivs = tuple(self.derivative_name(u, x) for u in self.fiber for x in self.base)
        self.jet = Chart("J1", self.base + self.fiber + derivs)
        self.base_chart = Chart("M", self.base)
        if isinstance(self.lagrangian, str):
            self.lagrangian = parse(self.lagrangian, self.jet)
        self.lagrangian = normalize(self.jet.check(sp.sympify(self.lagrangian)))

    @staticmethod
    def derivative_name(u: str, x: str) -> str:
        return f"{u}_{x}"

    @property
    def k(self) -> int:
        return len(self.base)

    @property
    def f(self) -> int:
        return len(self.fiber)

    def x(self, mu: int) -> sp.Symbol:
        return self.jet.symbols[mu]

    def u(self, a: int) -> sp.Symbol:
        return self.jet.symbols[self.k + a]

    def du(self, a: int, mu: int) -> sp.Symbol:
        return self.jet.symbols[self.k + self.f + a * self.k + mu]

    @cached_property
    def volume(self) -> DifferentialForm:
        return DifferentialForm.basis(self.jet, *self.base)

    @cached_property
    def forms(self) -> tuple[DifferentialForm, DifferentialForm]:
        jet, k = self.jet, self.k
        L = self.lagrangian
        theta = L * self.volume
        for a in range(self.f):
            contact = DifferentialForm.basis(jet, self.fiber[a])
            for nu in range(k):
                contact = contact - self.du(a, nu) * DifferentialForm.basis(jet, self.base[nu])
            for mu in range(k):
                p = sp.diff(L, self.du(a, mu))
                if p == 0:
                    continue
                vol_mu = interior_product(MultivectorField.basis(jet, self.base[mu]), self.volume)
                theta = theta + p * (contact ^ vol_mu)
        return theta, -exterior_derivative(theta)

    @property
    def theta(self) -> DifferentialForm:
        return self.forms[0]

    @property
    def omega(self) -> DifferentialForm:
        return self.forms[1]

    def structure(self) -> MultisymplecticStructure:
        """(J1, Omega_L) with potential -Theta_L."""
        return MultisymplecticStructure(self.omega, -self.theta)

    def section(self, *components) -> "FieldSection":
        comps = [parse(c, self.base_chart) if isinstance(c, str) else sp.sympify(c) for c in components]
        return FieldSection(self, comps)


def poincare_cartan(ls: LagrangianSystem) -> tuple[DifferentialForm, DifferentialForm]:
    return ls.forms


@dataclass(eq=False)
class FieldSection:
    system: LagrangianSystem
    components: list[sp.Expr]

    def __post_init__(self):
        if len(self.components) != self.system.f:
            raise ValueError(f"need {self.system.f} components")
        sub = {s: self.system.base_chart.symbols[i] for i, s in enumerate(self.system.jet.symbols[:self.system.k])}
        self.components = [normalize(sp.sympify(c).xreplace(sub)) for c in self.components]
        for c in self.components:
            self.system.base_chart.check(c)


# ------------------------------------------------------------------ regularity

@dataclass
class RegularityReport:
    verdict: ZeroTest  # ZERO: regular (see ``criterion``)
    criterion: str
    hessian_det: sp.Expr
    hessian_verdict: ZeroTest  # NONZERO: Hessian is nonsingular
    structure: MultisymplecticReport | None
    agree: bool


def regularity(ls: LagrangianSystem) -> RegularityReport:
    """Regularity of the Lagrangian, cross-checked against the Hessian.

    For k >= 2 the criterion is 1-nondegeneracy of Omega_L. For k = 1 the
    jet space is odd-dimensional, so Omega_L always has a kernel; there the
    criterion is that dt ^ Omega_L^f is a volume form, i.e. the kernel is one
    dimensional and transverse to the fibres of the jet over the base.
    """
    vars_ = [ls.du(a, mu) for a in range(ls.f) for mu in range(ls.k)]
    hess = sp.Matrix([[sp.diff(ls.lagrangian, v, w) for w in vars_] for v in vars_])
    det = normalize(hess.det(method="berkowitz"))
    hv = is_zero(det)
    rep = check_multisymplectic(ls.omega) if ls.omega.terms else None
    if rep is None:
        verdict, criterion = ZeroTest.NONZERO, "Omega_L vanishes identically"
    elif ls.k >= 2:
        verdict, criterion = rep.nondegenerate, "Omega_L is 1-nondegenerate"
    else:
        criterion = "dt ^ Omega_L^f is a volume form"
        top = ls.volume
        for _ in range(ls.f):
            top = top ^ ls.omega
        nonzero = top.zero_test()
        verdict = {ZeroTest.NONZERO: ZeroTest.ZERO, ZeroTest.ZERO: ZeroTest.NONZERO}.get(nonzero, nonzero)
    agree = (verdict is ZeroTest.ZERO) == (hv is ZeroTest.NONZERO)
    return RegularityReport(verdict, criterion, det, hv, rep, agree)


# ------------------------------------------------------------------ sections

def prolong(ls: LagrangianSystem, phi: FieldSection) -> SmoothMap:
    """j1 phi: x -> (x, phi(x), d phi / dx)."""
    base = ls.base_chart
    comps = list(base.symbols) + list(phi.components)
    comps += [sp.diff(phi.components[a], base.symbols[mu]) for a in range(ls.f) for mu in range(ls.k)]
    return SmoothMap(base, ls.jet, comps)


def _total_derivatives(ls: LagrangianSystem, phi: FieldSection) -> list[sp.Expr]:
    j1 = prolong(ls, phi)
    L = ls.lagrangian
    base = ls.base_chart
    out = []
    for a in range(ls.f):
        r = j1.pull_expr(sp.diff(L, ls.u(a)))
        for mu in range(ls.k):
            r -= sp.diff(j1.pull_expr(sp.diff(L, ls.du(a, mu))), base.symbols[mu])
        out.append(normalize(r))
    return out


@dataclass
class EulerLagrangeReport:
    residuals: list[sp.Expr]
    coordinate_verdict: ZeroTest  # ZERO: all residuals vanish
    intrinsic_verdict: ZeroTest  # ZERO: (j1 phi)^* i(X)Omega_L = 0 for all coordinate X
    violating_field: str | None
    violation: DifferentialForm | None

    @property
    def consistent(self) -> bool:
        return self.coordinate_verdict is self.intrinsic_verdict


def euler_lagrange_residual(ls: LagrangianSystem, phi: FieldSection) -> EulerLagrangeReport:
    res = _total_derivatives(ls, phi)
    coord = ZeroTest.combine(is_zero(r) for r in res)
    j1 = prolong(ls, phi)
    verdicts, violating, violation = [], None, None
    for name in ls.jet.coords:
        form = pullback(j1, interior_product(MultivectorField.basis(ls.jet, name), ls.omega))
        t = form.zero_test()
        verdicts.append(t)
        if t is ZeroTest.NONZERO and violating is None:
            violating, violation = name, form
    return EulerLagrangeReport(res, coord, ZeroTest.combine(verdicts), violating, violation)


# ------------------------------------------------------------------ symmetries

def prolong_vector_field(ls: LagrangianSystem, base_components: Sequence, fiber_components: Sequence) -> MultivectorField:
    """First jet prolongation of xi^mu(x) d/dx^mu + eta^a(x,u) d/du^a.

    eta^a_mu = D_mu eta^a - u^a_nu D_mu xi^nu with D_mu = d/dx^mu + u^b_mu d/du^b.
    """
    jet = ls.jet
    parse_ = lambda c: parse(c, jet) if isinstance(c, str) else sp.sympify(c)
    xi = [parse_(c) for c in base_components]
    eta = [parse_(c) for c in fiber_components]
    if len(xi) != ls.k or len(eta) != ls.f:
        raise ValueError("wrong number of base or fibre components")

    def total(expr, mu):
        out = sp.diff(expr, ls.x(mu))
        for b in range(ls.f):
            out += ls.du(b, mu) * sp.diff(expr, ls.u(b))
        return out

    comps = list(xi) + list(eta)
    for a in range(ls.f):
        for mu in range(ls.k):
            val = total(eta[a], mu) - sum((ls.du(a, nu) * total(xi[nu], mu) for nu in range(ls.k)), sp.Integer(0))
            comps.append(val)
    return MultivectorField.vector(jet, comps)


@dataclass
class SymmetryReport:
    theta_invariant: ZeroTest
    lagrangian_invariant: ZeroTest

    @property
    def verdict(self) -> ZeroTest:
        return ZeroTest.combine([self.theta_invariant, self.lagrangian_invariant])


def symmetry_check(ls: LagrangianSystem, xi: MultivectorField) -> SymmetryReport:
    """L(xi)Theta_L = 0, and strict invariance xi(L) = 0 with divergence-free base part."""
    theta_inv = lie_derivative(xi, ls.theta).zero_test()
    comps = xi.components()
    div = sum((sp.diff(comps[mu], ls.x(mu)) for mu in range(ls.k)), sp.Integer(0))
    lag_inv = ZeroTest.combine([is_zero(xi.apply(ls.lagrangian)), is_zero(div)])
    return SymmetryReport(theta_inv, lag_inv)


def noether_current(ls: LagrangianSystem, xi: MultivectorField) -> DifferentialForm:
    """i(xi)Theta_L."""
    return interior_product(xi, ls.theta)


@dataclass
class ConservationReport:
    verdict: ZeroTest  # ZERO: d((j1 phi)^* current) vanishes
    current: DifferentialForm
    pulled_current: DifferentialForm
    divergence: DifferentialForm
    solution: ZeroTest
    symmetry: SymmetryReport


def noether_conservation(ls: LagrangianSystem, xi: MultivectorField, phi: FieldSection,
                         current: DifferentialForm | None = None) -> ConservationReport:
    """d of the pulled-back current; ``current`` overrides i(xi)Theta_L (e.g. a shifted comomentum)."""
    sym = symmetry_check(ls, xi)
    el = euler_lagrange_residual(ls, phi)
    cur = noether_current(ls, xi) if current is None else current
    pulled = pullback(prolong(ls, phi), cur)
    div = exterior_derivative(pulled)
    return ConservationReport(div.zero_test(), cur, pulled, div, el.coordinate_verdict, sym)


# --------------------------------------------------------- Noether submanifolds

@dataclass
class NoetherSubmanifoldReport:
    applicable: bool
    euler_lagrange: EulerLagrangeReport
    momentum: MomentumTypeReport | None
    dimension: DimensionClass | None
    cauchy: dict | None = None

    @property
    def verdict(self) -> ZeroTest:
        if not self.applicable or self.momentum is None:
            return ZeroTest.NONZERO if self.euler_lagrange.intrinsic_verdict is ZeroTest.NONZERO else ZeroTest.UNDECIDED
        return self.momentum.integral


def noether_submanifold_check(ls: LagrangianSystem, a: LieAlgebraAction, phi: FieldSection,
                              other: FieldSection | None = None,
                              cauchy: SmoothMap | None = None) -> NoetherSubmanifoldReport:
    """Im j1 phi as a momentum-type submanifold of (J1, Omega_L).

    With a second solution ``other`` and a Cauchy submanifold ``cauchy``
    (a map into the base chart), also checks that both prolongations agree
    on the Cauchy data and that Im j1 other satisfies the same conditions.
    """
    el = euler_lagrange_residual(ls, phi)
    if el.intrinsic_verdict is not ZeroTest.ZERO:
        return NoetherSubmanifoldReport(False, el, None, None)
    sub = Submanifold(prolong(ls, phi))
    mt = is_momentum_type(sub, a)
    extra = None
    if other is not None and cauchy is not None:
        j_phi, j_psi = prolong(ls, phi), prolong(ls, other)
        on_data = ZeroTest.combine(
            is_zero(a_ - b_) for a_, b_ in zip(j_phi.compose(cauchy).components, j_psi.compose(cauchy).components))
        el2 = euler_lagrange_residual(ls, other)
        mt2 = is_momentum_type(Submanifold(j_psi), a) if el2.intrinsic_verdict is ZeroTest.ZERO else None
        extra = {
            "agree_on_cauchy_data": on_data,
            "other_is_solution": el2.intrinsic_verdict,
            "other_momentum_type": mt2.integral if mt2 else ZeroTest.NONZERO,
        }
    return NoetherSubmanifoldReport(True, el, mt, mt.dimension, extra)

