import random

import pytest

from multisymp.errors import DegreeError, InvariantViolation, NotHamiltonian, Unsolvable
from multisymp.exterior import DifferentialForm, MultivectorField, exterior_derivative, interior_product
from multisymp.msgeom import (
    HamiltonianClass,
    MultisymplecticStructure,
    bracket,
    bracket_identities,
    check_multisymplectic,
    contraction_matrix,
    hamiltonian_vector_field,
    is_locally_hamiltonian,
    lie_criterion,
)
from multisymp.symexpr import Chart, ZeroTest

from corpus import QP, R3, R5, form, plane, r5
from randforms import quadratic

Z, N = ZeroTest.ZERO, ZeroTest.NONZERO


def test_check_multisymplectic_examples():
    rep = check_multisymplectic(form(QP, 2, dq_dp=1))
    assert rep.closed is Z and rep.nondegenerate is Z and rep.rank == 2
    rep = check_multisymplectic(r5().omega)
    assert rep.nondegenerate is Z and rep.rank == 5
    r4 = Chart("R4", ("x", "y", "z", "w"))
    rep = check_multisymplectic(form(r4, 3, dx_dy_dz=1))
    assert rep.nondegenerate is N
    assert rep.kernel_basis == [MultivectorField.basis(r4, "w")]


def test_contraction_matrix_shape():
    matrix, rows = contraction_matrix(r5().omega)
    assert len(matrix) == 10 and len(matrix[0]) == 5 and len(rows) == 10


def test_check_multisymplectic_rejects_low_degree():
    with pytest.raises(DegreeError):
        check_multisymplectic(form(QP, 1, dq=1))


def test_structure_invariants():
    not_closed = form(Chart("R3b", ("a", "b", "c")), 2, da_db="c")
    with pytest.raises(InvariantViolation):
        MultisymplecticStructure(not_closed)
    with pytest.raises(InvariantViolation):
        MultisymplecticStructure(form(QP, 2, dq_dp=1), form(QP, 1, dp="2*q"))
    with pytest.raises(DegreeError):
        MultisymplecticStructure(form(QP, 2, dq_dp=1), form(QP, 0, one=1))


def test_hamiltonian_vector_field_examples():
    ms = plane()
    sol = hamiltonian_vector_field(ms, DifferentialForm.scalar(QP, QP.parse("(q^2+p^2)/2")))
    assert sol.field == MultivectorField.vector(QP, ["p", "-q"])
    assert sol.certified is Z and sol.unique
    vol = MultisymplecticStructure(form(R3, 3, dx_dy_dz=1))
    assert hamiltonian_vector_field(vol, form(R3, 1, dy="x")).field == MultivectorField.basis(R3, "z")
    assert hamiltonian_vector_field(r5(), form(R5, 1, dy="x")).field == MultivectorField.basis(R5, "z")


def test_unsolvable_carries_rank_certificate():
    with pytest.raises(Unsolvable) as exc:
        hamiltonian_vector_field(r5(), form(R5, 1, du="y"))
    cert = exc.value.certificate
    assert cert["equations"] == 10 and cert["unknowns"] == 5
    assert cert["witness"]["rank_matrix"] == 5 and cert["witness"]["rank_augmented"] == 6


def test_hamiltonian_degree_checked():
    with pytest.raises(DegreeError):
        hamiltonian_vector_field(plane(), form(QP, 1, dq=1))


def test_locally_hamiltonian_examples():
    ms = plane()
    q = QP.symbol("q")
    assert is_locally_hamiltonian(ms, MultivectorField.basis(QP, "q")) is Z
    assert is_locally_hamiltonian(ms, q * MultivectorField.basis(QP, "q")) is N
    rot = MultivectorField.vector(QP, ["p", "-q"])
    assert is_locally_hamiltonian(ms, rot) is Z
    for x in (MultivectorField.basis(QP, "q"), q * MultivectorField.basis(QP, "q"), rot):
        assert is_locally_hamiltonian(ms, x) is lie_criterion(ms, x)


def test_bracket_examples():
    ms = plane()
    q, p = (DifferentialForm.scalar(QP, s) for s in QP.symbols)
    assert hamiltonian_vector_field(ms, q).field == -MultivectorField.basis(QP, "p")
    assert hamiltonian_vector_field(ms, p).field == MultivectorField.basis(QP, "q")
    assert bracket(ms, q, p).representative == DifferentialForm.scalar(QP, 1)
    h = DifferentialForm.scalar(QP, QP.parse("q^2*p"))
    assert not bracket(ms, h, h).representative.terms
    vol = MultisymplecticStructure(form(R3, 3, dx_dy_dz=1))
    br = bracket(vol, form(R3, 1, dy="x"), form(R3, 1, dz="y"))
    # brute force: -Omega(X2, X1, .) with X1 = d/dz, X2 = d/dx
    assert br.representative == form(R3, 1, dy=1)


def test_bracket_rejects_non_hamiltonian():
    with pytest.raises(NotHamiltonian):
        bracket(r5(), form(R5, 1, du="y"), form(R5, 1, dy="x"))


def test_hamiltonian_class_equivalence():
    a = HamiltonianClass(form(R5, 1, dy="x"))
    assert a.equivalent(HamiltonianClass(form(R5, 1, dy="x", dz=1))) is Z
    assert a.equivalent(HamiltonianClass(form(R5, 1, dz="x"))) is N


def test_bracket_closure_symplectic_r4():
    r4 = Chart("T4", ("q1", "q2", "p1", "p2"))
    th = form(r4, 1, dp1="q1", dp2="q2")
    ms = MultisymplecticStructure(th.d(), th)
    rng = random.Random(3)
    for _ in range(10):
        z1, z2 = (DifferentialForm.scalar(r4, quadratic(rng, r4)) for _ in range(2))
        rep = bracket_identities(ms, z1, z2)
        assert rep.hamiltonian_form_identity is Z
        assert rep.reversed_order is Z


def test_bracket_closure_r5_pairs():
    ms = r5()
    pairs = [(form(R5, 1, dy="x"), form(R5, 1, dx="z^2/2")),
             (form(R5, 1, dz="y", dv="u"), form(R5, 1, dx="z^2/2")),
             (form(R5, 1, dy="x"), form(R5, 1, dz="y", dv="u"))]
    for z1, z2 in pairs:
        rep = bracket_identities(ms, z1, z2)
        assert rep.hamiltonian_form_identity is Z and rep.reversed_order is Z
        swapped = bracket(ms, z2, z1).representative
        assert (rep.bracket + swapped).zero_test() is Z


def test_printed_orientation_disagrees_when_commutator_is_nonzero():
    rep = bracket_identities(r5(), form(R5, 1, dy="x"), form(R5, 1, dx="z^2/2"))
    assert rep.commutator.terms
    assert rep.printed_order is N


def test_canonical_pairs_on_r4():
    r4 = Chart("T4", ("q1", "q2", "p1", "p2"))
    th = form(r4, 1, dp1="q1", dp2="q2")
    ms = MultisymplecticStructure(th.d(), th)
    for i in (1, 2):
        for j in (1, 2):
            q = DifferentialForm.scalar(r4, r4.symbol(f"q{i}"))
            p = DifferentialForm.scalar(r4, r4.symbol(f"p{j}"))
            assert bracket(ms, q, p).representative == DifferentialForm.scalar(r4, int(i == j))
