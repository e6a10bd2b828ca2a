from math import comb

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from multisymp.action import LieAlgebraAction
from multisymp.errors import DomainError, NotBasic, NotMomentumType, SectionMismatch
from multisymp.exterior import DifferentialForm, MultivectorField, SmoothMap
from multisymp.msgeom import MultisymplecticStructure
from multisymp.submfd import (
    ReductionData,
    Submanifold,
    characteristic_kernel,
    classify_dimension,
    is_momentum_type,
    momentum_eds_span_check,
    reduce,
    reduction_pipeline,
)
from multisymp.symexpr import Chart, ZeroTest

from corpus import R3, T2, form, t2_canonical

Z, N = ZeroTest.ZERO, ZeroTest.NONZERO
S2 = Chart("S2", ("a", "b"))
S3 = Chart("S3", ("a", "b", "c"))
QB = Chart("Qbar", ("bb", "cc"))


def embed(source, *components):
    return Submanifold(SmoothMap(source, T2, [source.parse(c) for c in components]))


def translations(*names):
    return LieAlgebraAction(t2_canonical(), [MultivectorField.basis(T2, n) for n in names], {})


def level_set():
    return embed(S2, "a", "b", "1", "2")


def slab():
    return embed(S3, "a", "b", "1", "c")


def first_reduction(isotropy=True):
    pi = SmoothMap(S3, QB, [S3.parse("b"), S3.parse("c")])
    sigma = SmoothMap(QB, S3, [0, QB.parse("bb"), QB.parse("cc")])
    gens = [MultivectorField.basis(T2, "q1")] if isotropy else []
    return ReductionData(slab(), gens, pi, sigma)


def brute(m, k, n, s):
    bound = comb(m, k) - n
    ok = [q for q in range(m + 1) if comb(q, k) <= bound]
    return comb(s, k) <= bound, (max(ok) if ok else None), comb(s, k) == bound


def test_dimension_examples():
    c = classify_dimension(5, 2, 3, 4)
    assert (c.admissible, c.optimal_s, c.maximal) == (True, 4, False)
    c = classify_dimension(4, 1, 2, 2)
    assert (c.admissible, c.optimal_s, c.maximal) == (True, 2, True)
    for s in range(2, 6):
        assert not classify_dimension(5, 2, 10, s).admissible
    assert classify_dimension(5, 2, 10, 1).admissible
    assert classify_dimension(5, 2, 10, 0).optimal_s == 1


def test_k1_optimal_is_m_minus_n():
    for m in range(2, 9):
        for n in range(m + 1):
            assert classify_dimension(m, 1, n, 0).optimal_s == m - n


@pytest.mark.parametrize("args", [(3, 3, 0, 1), (3, -1, 0, 1), (4, 1, -1, 0), (4, 1, 0, 5), (4, 1, 0, -1)])
def test_dimension_domain_errors(args):
    with pytest.raises(DomainError):
        classify_dimension(*args)


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_dimension_matches_brute_force(data):
    m = data.draw(st.integers(1, 12))
    k = data.draw(st.integers(0, m - 1))
    n = data.draw(st.integers(0, comb(m, k)))
    s = data.draw(st.integers(0, m))
    c = classify_dimension(m, k, n, s)
    assert (c.admissible, c.optimal_s, c.maximal) == brute(m, k, n, s)


def test_immersion_check():
    with pytest.raises(DomainError):
        embed(S2, "a", "a", "1", "2")


def test_level_set_is_momentum_type():
    r = is_momentum_type(level_set(), translations("q1", "q2"))
    assert r.verdict is Z and r.isotropy == [0, 1]
    assert r.induced[0] == MultivectorField.basis(S2, "a")
    assert r.dimension.maximal


def test_diagonal_is_not_momentum_type():
    sub = embed(S3, "a", "b", "a", "c")
    r = is_momentum_type(sub, translations("q1", "q2"))
    assert r.verdict is N and r.per_generator[0] is N
    assert r.pulled_contractions[0] == form(S3, 1, da=1)


def test_trivial_algebra_passes():
    r = is_momentum_type(embed(S3, "a", "b", "a", "c"), translations())
    assert r.verdict is Z and r.isotropy == []
    assert momentum_eds_span_check(embed(S3, "a", "b", "a", "c"), translations()).inclusion is Z


def test_kernel_examples():
    k = characteristic_kernel(level_set(), t2_canonical().omega)
    assert not k.omega_s.terms and set(k.kernel_rank_at_samples) == {2}
    field = MultivectorField.basis(T2, "q1")
    sub = slab()
    induced = is_momentum_type(sub, LieAlgebraAction(t2_canonical(), [field], {})).induced[0]
    k = characteristic_kernel(sub, t2_canonical().omega, [induced])
    assert k.omega_s == form(S3, 2, db_dc=1)
    assert set(k.kernel_rank_at_samples) == {1}
    assert all(b == [[1, 0, 0]] for b in k.kernel_basis_at_samples)
    assert k.isotropy_contained is Z


def test_kernel_trivial_by_dimension():
    sub = Submanifold(SmoothMap(S2, R3, [S2.parse("a"), S2.parse("b"), 0]))
    k = characteristic_kernel(sub, form(R3, 3, dx_dy_dz=1))
    assert k.trivial_by_dimension and not k.omega_s.terms


def test_span_check():
    r = momentum_eds_span_check(level_set(), translations("q1", "q2"))
    assert r.inclusion is Z and r.equality is Z and r.codimension_count == 2
    r = momentum_eds_span_check(embed(S3, "a", "b", "a", "c"), translations("q1", "q2"))
    assert r.inclusion is N and r.violation is not None


def test_induced_isotropy_kills_pullback():
    sub = level_set()
    r = is_momentum_type(sub, translations("q1", "q2"))
    k = characteristic_kernel(sub, t2_canonical().omega, list(r.induced.values()))
    assert k.isotropy_contained is Z


def test_reduction_of_translations():
    rd = first_reduction()
    r = reduction_pipeline(rd, translations("q1"))
    red = r.reduction
    assert red.omega_tilde == form(QB, 2, dbb_dcc=1)
    assert red.pullback_identity is Z and red.closed is Z and red.basic_certified is Z
    assert red.vertical is Z and red.submersion_points > 0


def test_identity_reduction():
    sub = slab()
    ident = SmoothMap.identity(S3)
    r = reduce(ReductionData(sub, [], ident, ident), t2_canonical().omega)
    assert r.omega_tilde == r.omega_s and r.pullback_identity is Z


def test_trivial_reduction_by_dimension():
    ms = MultisymplecticStructure(form(R3, 3, dx_dy_dz=1))
    S1 = Chart("S1", ("a",))
    sub = Submanifold(SmoothMap(S1, R3, [S1.parse("a"), 0, 0]))
    ident = SmoothMap.identity(S1)
    r = reduce(ReductionData(sub, [], ident, ident), ms.omega)
    assert r.trivial_by_dimension and not r.omega_tilde.terms


def test_non_basic_generator():
    rd = first_reduction()
    bad = ReductionData(rd.sub, [MultivectorField.basis(T2, "q2")], rd.projection, rd.section)
    with pytest.raises(NotBasic):
        reduce(bad, t2_canonical().omega)


def test_section_mismatch():
    pi = SmoothMap(S3, QB, [S3.parse("b"), S3.parse("c")])
    sigma = SmoothMap(QB, S3, [0, QB.parse("cc"), QB.parse("bb")])
    with pytest.raises(SectionMismatch):
        reduce(ReductionData(slab(), [], pi, sigma), t2_canonical().omega)
    with pytest.raises(SectionMismatch):
        ReductionData(slab(), [], pi, SmoothMap(S2, S3, [0, S2.parse("a"), S2.parse("b")]))


def test_pipeline_stops_at_momentum_type():
    rd = first_reduction()
    diag = embed(S3, "a", "b", "a", "c")
    bad = ReductionData(diag, [], rd.projection, rd.section)
    with pytest.raises(NotMomentumType):
        reduction_pipeline(bad, translations("q1"))


def test_higher_degree_reduction():
    # Omega = dx^dy^dz + dx^du^dv with translations along v and S = {u = 0}
    R5 = Chart("R5", ("x", "y", "z", "u", "v"))
    ms = MultisymplecticStructure(form(R5, 3, dx_dy_dz=1, dx_du_dv=1))
    S4 = Chart("S4", ("a", "b", "c", "e"))
    sub = Submanifold(SmoothMap(S4, R5, [S4.parse("a"), S4.parse("b"), S4.parse("c"), 0, S4.parse("e")]))
    a = LieAlgebraAction(ms, [MultivectorField.basis(R5, "v")], {})
    mt = is_momentum_type(sub, a)
    assert mt.verdict is Z and mt.isotropy == [0]
    k = characteristic_kernel(sub, ms.omega, [mt.induced[0]])
    assert k.omega_s == form(S4, 3, da_db_dc=1) and set(k.kernel_rank_at_samples) == {1}
    Q3 = Chart("Q3", ("x1", "x2", "x3"))
    pi = SmoothMap(S4, Q3, [S4.parse("a"), S4.parse("b"), S4.parse("c")])
    sigma = SmoothMap(Q3, S4, [Q3.parse("x1"), Q3.parse("x2"), Q3.parse("x3"), 0])
    red = reduction_pipeline(ReductionData(sub, a.generators, pi, sigma), a).reduction
    assert red.omega_tilde == form(Q3, 3, dx1_dx2_dx3=1) and red.pullback_identity is Z
