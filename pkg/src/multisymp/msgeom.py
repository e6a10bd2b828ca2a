"""Multisymplectic structures, Hamiltonian vector fields and the form bracket."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import sympy as sp

from . import linalg
from .errors import DegreeError, InvariantViolation, NotHamiltonian, Undecided, Unsolvable
from .exterior import (
    DifferentialForm,
    MultivectorField,
    exterior_derivative,
    interior_product,
    lie_bracket,
    lie_derivative,
    wedge_multivectors,
)
from .symexpr import ZeroTest, current_settings, sample_points, to_text


@dataclass(frozen=True, eq=False)
class MultisymplecticStructure:
    """A closed (k+1)-form on a chart, optionally with a potential theta, d theta = omega.

    Closedness and the potential equation are checked on construction; a
    NONZERO outcome raises, an UNDECIDED one is recorded in ``closed``.
    """

    omega: DifferentialForm
    theta: DifferentialForm | None = None
    closed: ZeroTest = field(init=False)

    def __post_init__(self):
        m = self.omega.chart.dim
        if self.omega.degree < 1 or self.omega.degree > m:
            raise DegreeError(f"structure form of degree {self.omega.degree} on a {m}-dimensional chart")
        closed = exterior_derivative(self.omega).zero_test()
        if closed is ZeroTest.NONZERO:
            raise InvariantViolation("structure form is not closed")
        object.__setattr__(self, "closed", closed)
        if self.theta is not None:
            if self.theta.chart != self.omega.chart or self.theta.degree != self.omega.degree - 1:
                raise DegreeError("potential must be a k-form on the same chart")
            if (exterior_derivative(self.theta) - self.omega).zero_test() is ZeroTest.NONZERO:
                raise InvariantViolation("d(theta) differs from omega")

    @property
    def chart(self):
        return self.omega.chart

    @property
    def k(self) -> int:
        return self.omega.degree - 1


@dataclass(frozen=True)
class HamiltonianClass:
    """A (k-1)-form standing for its class modulo closed forms."""

    representative: DifferentialForm

    def equivalent(self, other: "HamiltonianClass") -> ZeroTest:
        return exterior_derivative(self.representative - other.representative).zero_test()


def contraction_matrix(omega: DifferentialForm) -> tuple[list[list[sp.Expr]], list[tuple[int, ...]]]:
    """Matrix of X -> i(X)omega: rows are basis k-forms, columns coordinate directions."""
    chart = omega.chart
    k = omega.degree - 1
    rows_idx = list(combinations(range(chart.dim), k))
    position = {idx: r for r, idx in enumerate(rows_idx)}
    matrix = [[sp.Integer(0)] * chart.dim for _ in rows_idx]
    for i in range(chart.dim):
        contracted = interior_product(MultivectorField(chart, 1, {(i,): 1}), omega)
        for idx, c in contracted.terms.items():
            matrix[position[idx]][i] = c
    return matrix, rows_idx


def _rational_only(matrix) -> bool:
    return all(not x.atoms(sp.Function) for row in matrix for x in row)


@dataclass
class MultisymplecticReport:
    closed: ZeroTest
    nondegenerate: ZeroTest  # ZERO means "kernel is zero", i.e. 1-nondegenerate
    rank: int
    dimension: int
    certain: bool
    method: str
    kernel_basis: list[MultivectorField]
    sample_ranks: list[tuple[dict, int]]

    @property
    def is_multisymplectic(self) -> ZeroTest:
        return ZeroTest.combine([self.closed, self.nondegenerate])


def check_multisymplectic(omega: DifferentialForm) -> MultisymplecticReport:
    if omega.degree < 2:
        raise DegreeError("a multisymplectic form has degree at least 2")
    chart = omega.chart
    closed = exterior_derivative(omega).zero_test()
    matrix, _ = contraction_matrix(omega)
    settings = current_settings()
    points = sample_points(chart.symbols, settings.rank_samples, salt=1)
    sample_ranks = [(pt, linalg.rank(linalg.substitute(matrix, pt))[0]) for pt in points]
    method = "symbolic" if _rational_only(matrix) else "symbolic-with-kernels"
    basis_vecs, certain = linalg.nullspace(matrix)
    r = chart.dim - len(basis_vecs)
    if any(rk == chart.dim for _, rk in sample_ranks):
        # one full-rank point certifies generic nondegeneracy
        nondeg = ZeroTest.ZERO
    elif certain:
        nondeg = ZeroTest.ZERO if r == chart.dim else ZeroTest.NONZERO
    else:
        nondeg = ZeroTest.UNDECIDED
    kernel = [MultivectorField.vector(chart, v) for v in basis_vecs] if nondeg is not ZeroTest.ZERO else []
    return MultisymplecticReport(closed, nondeg, r, chart.dim, certain, method, kernel, sample_ranks)


@dataclass
class HamiltonianSolution:
    field: MultivectorField
    certified: ZeroTest
    unique: bool


def hamiltonian_vector_field(ms: MultisymplecticStructure, zeta: DifferentialForm) -> HamiltonianSolution:
    """Solve i(X)Omega = d zeta for a vector field X.

    Raises :class:`Unsolvable` with a residual certificate when d zeta lies
    outside the image of the contraction map, and :class:`Undecided` when
    the zero tests cannot settle consistency or the final certificate.
    """
    if zeta.degree != ms.k - 1:
        raise DegreeError(f"Hamiltonian form must have degree {ms.k - 1}, got {zeta.degree}")
    chart = ms.chart
    matrix, rows_idx = contraction_matrix(ms.omega)
    dz = exterior_derivative(zeta)
    rhs = [dz.terms.get(idx, sp.Integer(0)) for idx in rows_idx]
    sol = linalg.solve(matrix, rhs)
    if sol.consistent is ZeroTest.NONZERO:
        raise Unsolvable("d zeta is outside the image of X -> i(X)Omega",
                         _unsolvable_certificate(matrix, rhs, rows_idx, sol, chart))
    if sol.consistent is ZeroTest.UNDECIDED:
        raise Undecided("consistency of the Hamiltonian system could not be decided")
    x = MultivectorField.vector(chart, sol.values)
    certified = (interior_product(x, ms.omega) - dz).zero_test()
    if certified is ZeroTest.NONZERO:
        raise AssertionError("solver returned a field that fails i(X)Omega = d zeta")
    return HamiltonianSolution(x, certified, unique=not sol.free_columns and sol.certain)


def _unsolvable_certificate(matrix, rhs, rows_idx, sol, chart) -> dict:
    points = sample_points(chart.symbols, current_settings().rank_samples, salt=2)
    witness = None
    for pt in points:
        a = linalg.substitute(matrix, pt)
        ra, _ = linalg.rank(a)
        rb, _ = linalg.rank([row + [b.xreplace(pt)] for row, b in zip(a, rhs)])
        if rb > ra:
            witness = {"point": {s.name: str(v) for s, v in pt.items()},
                       "rank_matrix": ra, "rank_augmented": rb}
            break
    residual = next(((i, r) for i, r in sol.residuals), None)
    return {
        "equations": len(rows_idx),
        "unknowns": chart.dim,
        "rank": sol.rank,
        "residual": None if residual is None else to_text(residual[1]),
        "witness": witness,
    }


def is_locally_hamiltonian(ms: MultisymplecticStructure, x: MultivectorField) -> ZeroTest:
    """ZERO when d(i(X)Omega) vanishes identically (X is locally Hamiltonian)."""
    if x.degree != 1:
        raise DegreeError("expected a vector field")
    return exterior_derivative(interior_product(x, ms.omega)).zero_test()


def lie_criterion(ms: MultisymplecticStructure, x: MultivectorField) -> ZeroTest:
    return lie_derivative(x, ms.omega).zero_test()


def _field_for(ms: MultisymplecticStructure, zeta) -> MultivectorField:
    form = zeta.representative if isinstance(zeta, HamiltonianClass) else zeta
    try:
        return hamiltonian_vector_field(ms, form).field
    except Unsolvable as exc:
        raise NotHamiltonian(f"{form.to_text()} is not a Hamiltonian form") from exc


def bracket_of_fields(ms: MultisymplecticStructure, x1: MultivectorField, x2: MultivectorField) -> DifferentialForm:
    """-i(X1) i(X2) Omega."""
    return -interior_product(x1, interior_product(x2, ms.omega))


def bracket(ms: MultisymplecticStructure, zeta1, zeta2) -> HamiltonianClass:
    """{z1, z2} := -i(X_z1) i(X_z2) Omega."""
    x1 = _field_for(ms, zeta1)
    x2 = _field_for(ms, zeta2)
    return HamiltonianClass(bracket_of_fields(ms, x1, x2))


@dataclass
class BracketIdentityReport:
    """Both orientations of the closure identity for a Hamiltonian pair.

    ``hamiltonian_form_identity``: i([X1,X2])Omega = d(i(X1^X2)Omega).
    ``printed_order``:   d{z1,z2} = i([X1,X2])Omega.
    ``reversed_order``:  d{z1,z2} = i([X2,X1])Omega.
    """

    hamiltonian_form_identity: ZeroTest
    printed_order: ZeroTest
    reversed_order: ZeroTest
    bracket: DifferentialForm
    commutator: MultivectorField


def bracket_identities(ms: MultisymplecticStructure, zeta1, zeta2) -> BracketIdentityReport:
    x1 = _field_for(ms, zeta1)
    x2 = _field_for(ms, zeta2)
    br = bracket_of_fields(ms, x1, x2)
    comm = lie_bracket(x1, x2)
    i_comm = interior_product(comm, ms.omega)
    d_br = exterior_derivative(br)
    ham_form = interior_product(wedge_multivectors(x1, x2), ms.omega)
    return BracketIdentityReport(
        hamiltonian_form_identity=(i_comm - exterior_derivative(ham_form)).zero_test(),
        printed_order=(d_br - i_comm).zero_test(),
        reversed_order=(d_br + i_comm).zero_test(),
        bracket=br,
        commutator=comm,
    )


def require_zero(verdict: ZeroTest, what: str) -> None:
    if verdict is ZeroTest.UNDECIDED:
        raise Undecided(what)
