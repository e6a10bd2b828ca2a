"""Shared structures used across the test files."""

from __future__ import annotations

from multisymp.action import GroupSample, LieAlgebraAction
from multisymp.exterior import DifferentialForm, MultivectorField, SmoothMap
from multisymp.msgeom import MultisymplecticStructure
from multisymp.symexpr import Chart

QP = Chart("plane", ("q", "p"))
R3 = Chart("R3", ("x", "y", "z"))
R5 = Chart("R5", ("x", "y", "z", "u", "v"))
T2 = Chart("T", ("q1", "q2", "p1", "p2"))


def form(chart: Chart, degree: int, **terms) -> DifferentialForm:
    """form(R5, 1, dy="x") with keys naming wedge factors like 'dx_dy'."""
    out = {}
    for key, coeff in terms.items():
        names = [k[1:] for k in key.split("_")] if key != "one" else []
        out[tuple(chart.index(n) for n in names)] = coeff
    return DifferentialForm(chart, degree, out)


def plane(theta: str = "q") -> MultisymplecticStructure:
    th = form(QP, 1, dp=theta)
    return MultisymplecticStructure(th.d(), th)


def r5() -> MultisymplecticStructure:
    return MultisymplecticStructure(form(R5, 3, dx_dy_dz=1, dx_du_dv=1))


def t2_canonical() -> MultisymplecticStructure:
    th = form(T2, 1, dp1="q1", dp2="q2")
    return MultisymplecticStructure(th.d(), th)


def se2(samples: bool = True) -> LieAlgebraAction:
    ms = t2_canonical()
    gens = [MultivectorField.basis(T2, "p1"), MultivectorField.basis(T2, "p2"),
            MultivectorField.vector(T2, ["q2", "-q1", "p2", "-p1"])]
    smp = []
    if samples:
        shift = SmoothMap(T2, T2, [T2.parse(c) for c in ("q1", "q2", "p1 + 1", "p2 + 2")])
        rot = SmoothMap(T2, T2, [T2.parse(c) for c in (
            "3/5*q1 + 4/5*q2", "-4/5*q1 + 3/5*q2", "3/5*p1 + 4/5*p2", "-4/5*p1 + 3/5*p2")])
        smp = [GroupSample("shift", shift, [[1, 0, 2], [0, 1, -1], [0, 0, 1]]),
               GroupSample("rot", rot, [["3/5", "-4/5", 0], ["4/5", "3/5", 0], [0, 0, 1]])]
    return LieAlgebraAction(ms, gens, {(0, 2, 1): 1, (1, 2, 0): -1}, samples=smp, names=["P1", "P2", "R"])


def plane_translations(samples: bool = False) -> LieAlgebraAction:
    ms = plane()
    gens = [MultivectorField.basis(QP, "q"), MultivectorField.basis(QP, "p")]
    smp = []
    if samples:
        shift = SmoothMap(QP, QP, [QP.parse("q + 1"), QP.parse("p + 1")])
        smp = [GroupSample("shift", shift, [[1, 0], [0, 1]])]
    return LieAlgebraAction(ms, gens, {}, samples=smp)
