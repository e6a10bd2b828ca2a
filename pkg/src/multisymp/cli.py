"""Command-line front end: ``multisymp <command> [scene.msc] [names...]``.

Exit status: 0 when no check FAILs, 1 when some check FAILs, 2 on scene or
usage errors, 3 when ``--strict`` is given and some check is UNDECIDED.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import action as act
from . import lagfield as lag
from . import msgeom, submfd
from .exterior import exterior_derivative
from .errors import (
    MissingSamples,
    MultisympError,
    NotBasic,
    NotHamiltonian,
    NotMomentumType,
    NotStronglyHamiltonian,
    SceneError,
    SectionMismatch,
    Undecided,
    Unsolvable,
)
from .report import FAIL, PASS, UNDECIDED, Report, verdict_of
from .scene import Scene, load_scene
from .symexpr import Settings, ZeroTest, to_text, using_settings

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNDECIDED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _get(scene: Scene, table: str, name: str):
    objs = getattr(scene, table)
    if name not in objs:
        raise UsageError(f"{scene.path}: no {table[:-1]} named {name!r}")
    return objs[name]


def _structure(scene: Scene, name: str) -> msgeom.MultisymplecticStructure:
    if name in scene.structures:
        return scene.structures[name]
    if name in scene.forms:
        return msgeom.MultisymplecticStructure(scene.forms[name])
    raise UsageError(f"{scene.path}: {name!r} is neither a structure nor a form")


def _form(scene: Scene, name: str):
    return _get(scene, "forms", name)


# ------------------------------------------------------------------ commands

def cmd_check_ms(rep: Report, scene: Scene, names: list[str]):
    for name in names or sorted(scene.structures):
        ms = _structure(scene, name)
        r = msgeom.check_multisymplectic(ms.omega)
        rep.add("check-ms", [name], verdict_of(r.is_multisymplectic), closed=r.closed,
                nondegenerate=r.nondegenerate, rank=r.rank, dimension=r.dimension,
                method=r.method, kernel=[v.to_text() for v in r.kernel_basis])


def cmd_hvf(rep: Report, scene: Scene, omega: str, zeta: str):
    ms = _structure(scene, omega)
    try:
        sol = msgeom.hamiltonian_vector_field(ms, _form(scene, zeta))
    except Unsolvable as exc:
        rep.add("hvf", [omega, zeta], FAIL, reason="unsolvable", certificate=exc.certificate)
        return
    except Undecided as exc:
        rep.add("hvf", [omega, zeta], UNDECIDED, reason=str(exc))
        return
    rep.add("hvf", [omega, zeta], verdict_of(sol.certified), field=sol.field, unique=sol.unique)


def cmd_bracket(rep: Report, scene: Scene, omega: str, z1: str, z2: str):
    ms = _structure(scene, omega)
    f1, f2 = _form(scene, z1), _form(scene, z2)
    try:
        ids = msgeom.bracket_identities(ms, f1, f2)
        swapped = msgeom.bracket(ms, f2, f1)
    except NotHamiltonian as exc:
        rep.add("bracket", [omega, z1, z2], FAIL, reason=str(exc))
        return
    except Undecided as exc:
        rep.add("bracket", [omega, z1, z2], UNDECIDED, reason=str(exc))
        return
    anti = (ids.bracket + swapped.representative).zero_test()
    rep.add("bracket", [omega, z1, z2], PASS, bracket=ids.bracket, commutator=ids.commutator)
    rep.add("bracket-antisymmetry", [omega, z1, z2], verdict_of(anti))
    rep.add("bracket-closure", [omega, z1, z2],
            verdict_of(ZeroTest.combine([ids.hamiltonian_form_identity, ids.reversed_order])),
            hamiltonian_form_identity=ids.hamiltonian_form_identity,
            d_bracket_eq_i_X2X1=ids.reversed_order, d_bracket_eq_i_X1X2=ids.printed_order)


def cmd_classify(rep: Report, scene: Scene, name: str):
    a = _get(scene, "actions", name)
    c = act.classify_action(a)
    rep.add("classify-action", [name], verdict_of(c.multisymplectic),
            locally_hamiltonian=c.locally_hamiltonian, strongly_hamiltonian=c.strongly_hamiltonian,
            exact=c.exact,
            generators=[{"name": g.name, "lie": g.lie_criterion, "closed_contraction": g.locally_hamiltonian,
                         "theta_invariant": g.theta_invariant, "hamiltonian_form": g.hamiltonian_form,
                         "source": g.source} for g in c.generators])


def _comomentum(rep: Report, name: str, a) -> act.ComomentumMap | None:
    try:
        return act.build_comomentum(a)
    except NotStronglyHamiltonian as exc:
        rep.add("comomentum", [name], FAIL, reason=str(exc))
    except Undecided as exc:
        rep.add("comomentum", [name], UNDECIDED, reason=str(exc))
    return None


def cmd_comomentum(rep: Report, scene: Scene, name: str):
    a = _get(scene, "actions", name)
    j = _comomentum(rep, name, a)
    if j is not None:
        rep.add("comomentum", [name], verdict_of(ZeroTest.combine(j.certificates)),
                forms=dict(zip(a.names, j.forms)), sources=j.sources)


def cmd_defect(rep: Report, scene: Scene, name: str):
    a = _get(scene, "actions", name)
    j = _comomentum(rep, name, a)
    if j is None:
        return
    d = act.poissonian_defect(a, j)
    gamma = {f"{a.names[i]},{a.names[k]}": g for (i, k), g in d.gamma.items() if i < k}
    rep.add("defect", [name], verdict_of(d.poissonian), gamma=gamma, this_map=d.homomorphism,
            other_order=d.homomorphism_other_order, antisymmetric=d.antisymmetric,
            correction=None if d.correction is None else dict(zip(a.names, d.correction)))


def cmd_equivariance(rep: Report, scene: Scene, name: str):
    a = _get(scene, "actions", name)
    j = _comomentum(rep, name, a)
    if j is None:
        return
    try:
        e = act.check_equivariance(a, j)
    except MissingSamples as exc:
        rep.add("equivariance", [name], UNDECIDED, reason=f"MissingSamples: {exc}")
        return
    rep.add("equivariance", [name], verdict_of(e.action), this_map=e.this_map, witness=e.witness,
            samples=[{"sample": s.sample, "preserves_omega": s.preserves_omega,
                      "ad_consistent": s.ad_consistent, "identity": s.identity,
                      "printed_sign_identity": s.printed_sign_identity} for s in e.samples])


def cmd_submanifold(rep: Report, scene: Scene, sname: str, aname: str):
    sub = _get(scene, "submanifolds", sname)
    a = _get(scene, "actions", aname)
    mt = submfd.is_momentum_type(sub, a)
    dims = mt.dimension
    rep.add("momentum-type", [sname, aname], verdict_of(mt.integral), per_generator=mt.per_generator,
            pulled=mt.pulled_contractions, isotropy=[a.names[i] for i in mt.isotropy],
            admissible=dims.admissible, optimal_s=dims.optimal_s, maximal=dims.maximal)
    if sub.dim >= a.ms.k:
        span = submfd.momentum_eds_span_check(sub, a)
        rep.add("eds-span", [sname, aname], verdict_of(span.inclusion), span_dims=span.span_dims,
                codimension_count=span.codimension_count, equality=span.equality, violation=span.violation)


def cmd_dims(rep: Report, m: int, k: int, n: int, s: int):
    d = submfd.classify_dimension(m, k, n, s)
    rep.add("dims", [str(m), str(k), str(n), str(s)], PASS if d.admissible else FAIL,
            admissible=d.admissible, optimal_s=d.optimal_s, maximal=d.maximal, bound=d.bound)


def cmd_reduce(rep: Report, scene: Scene, name: str):
    rd = _get(scene, "reductions", name)
    a = scene.reduction_actions.get(name)
    omega = scene.reduction_structures[name].omega
    if a is not None:
        mt = submfd.is_momentum_type(rd.sub, a)
        rep.add("reduce-momentum-type", [name], verdict_of(mt.integral), pulled=mt.pulled_contractions)
        if mt.integral is not ZeroTest.ZERO:
            return
    try:
        r = submfd.reduce(rd, omega)
    except (NotBasic, NotMomentumType, SectionMismatch) as exc:
        rep.add("reduce", [name], FAIL, reason=f"{type(exc).__name__}: {exc}")
        return
    verdict = ZeroTest.combine([r.section_identity, r.vertical, r.basic_certified, r.pullback_identity, r.closed])
    rep.add("reduce", [name], verdict_of(verdict), omega_s=r.omega_s, omega_tilde=r.omega_tilde,
            section_identity=r.section_identity, vertical=r.vertical, basic=r.basic_certified,
            pullback_identity=r.pullback_identity, closed=r.closed, uniqueness=r.uniqueness)


def cmd_lagrangian(rep: Report, scene: Scene, name: str):
    entry = _get(scene, "lagrangians", name)
    ls = entry.system
    theta, omega = ls.forms
    reg = lag.regularity(ls)
    rep.add("poincare-cartan", [name], verdict_of(exterior_derivative(omega).zero_test()),
            theta=theta, omega=omega)
    rep.add("regularity", [name], verdict_of(reg.verdict), criterion=reg.criterion, hessian_det=to_text(reg.hessian_det),
            hessian=reg.hessian_verdict, agree=reg.agree)
    for sec_name, phi in sorted(entry.sections.items()):
        el = lag.euler_lagrange_residual(ls, phi)
        rep.add("euler-lagrange", [name, sec_name], verdict_of(el.intrinsic_verdict),
                residuals=[to_text(r) for r in el.residuals], coordinate=el.coordinate_verdict,
                violating_field=el.violating_field, violation=el.violation)
    for sym_name, xi in sorted(entry.symmetries.items()):
        s = lag.symmetry_check(ls, xi)
        rep.add("symmetry", [name, sym_name], verdict_of(s.verdict), theta_invariant=s.theta_invariant,
                lagrangian_invariant=s.lagrangian_invariant, current=lag.noether_current(ls, xi))
        for sec_name, phi in sorted(entry.sections.items()):
            c = lag.noether_conservation(ls, xi, phi)
            rep.add("noether-conservation", [name, sym_name, sec_name], verdict_of(c.verdict),
                    pulled_current=c.pulled_current, divergence=c.divergence)
    if entry.symmetries and entry.sections:
        names = sorted(entry.symmetries)
        a = act.LieAlgebraAction(ls.structure(), [entry.symmetries[n] for n in names],
                                 entry.structure_constants, names=names)
        for sec_name, phi in sorted(entry.sections.items()):
            r = lag.noether_submanifold_check(ls, a, phi)
            rep.add("noether-submanifold", [name, sec_name], verdict_of(r.verdict), applicable=r.applicable,
                    optimal_s=None if r.dimension is None else r.dimension.optimal_s)


def cmd_all(rep: Report, scene: Scene):
    cmd_check_ms(rep, scene, [])
    for name, a in sorted(scene.actions.items()):
        cmd_classify(rep, scene, name)
        cmd_defect(rep, scene, name)
        if a.samples:
            cmd_equivariance(rep, scene, name)
    for sname, sub in sorted(scene.submanifolds.items()):
        paired = scene.pairings.get(sname)
        for aname, a in sorted(scene.actions.items()):
            if (aname in paired) if paired is not None else a.chart == sub.ambient:
                cmd_submanifold(rep, scene, sname, aname)
    for name in sorted(scene.reductions):
        cmd_reduce(rep, scene, name)
    for name in sorted(scene.lagrangians):
        cmd_lagrangian(rep, scene, name)


# ---------------------------------------------------------------------- main

COMMANDS = {
    # name: (handler, positional names after the scene, takes variadic names)
    "check-ms": (cmd_check_ms, ["structures"], True),
    "hvf": (cmd_hvf, ["omega", "zeta"], False),
    "bracket": (cmd_bracket, ["omega", "z1", "z2"], False),
    "classify-action": (cmd_classify, ["action"], False),
    "comomentum": (cmd_comomentum, ["action"], False),
    "defect": (cmd_defect, ["action"], False),
    "equivariance": (cmd_equivariance, ["action"], False),
    "submanifold": (cmd_submanifold, ["submanifold", "action"], False),
    "reduce": (cmd_reduce, ["reduction"], False),
    "lagrangian": (cmd_lagrangian, ["lagrangian"], False),
    "all": (cmd_all, [], False),
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--strict", action="store_true", help="exit 3 when any check is UNDECIDED")
    p.add_argument("--seed", type=int, help="sampling seed (default 42)")
    p.add_argument("--samples", type=int, help="sample points per zero test (default 16)")
    p.add_argument("--json", metavar="PATH", help="write the structured .msr report to PATH")
    p.add_argument("--quiet", action="store_true", help="print only the summary line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multisymp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, args, variadic) in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("scene", help=".msc scene file")
        for a in args:
            if variadic:
                p.add_argument(a, nargs="*")
            else:
                p.add_argument(a)
        _common(p)
    p = sub.add_parser("dims", help="binomial dimension classification")
    for a in ("m", "k", "n", "s"):
        p.add_argument(a, type=int)
    _common(p)
    return parser


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    overrides = {k: getattr(ns, k) for k in ("seed", "samples") if getattr(ns, k) is not None}
    if overrides.get("samples", 1) < 1:
        print("multisymp: --samples must be positive", file=err)
        return EXIT_USAGE
    start = time.perf_counter()
    try:
        if ns.command == "dims":
            settings = Settings(**overrides)
            rep = Report.for_settings(None, settings)
            with using_settings(settings):
                cmd_dims(rep, ns.m, ns.k, ns.n, ns.s)
        else:
            scene = load_scene(ns.scene, overrides)
            rep = Report.for_settings(scene.path, scene.settings)
            handler, args, variadic = COMMANDS[ns.command]
            with using_settings(scene.settings):
                if variadic:
                    handler(rep, scene, getattr(ns, args[0]))
                else:
                    handler(rep, scene, *(getattr(ns, a) for a in args))
    except (SceneError, UsageError) as exc:
        print(f"multisymp: {exc}", file=err)
        return EXIT_USAGE
    except MultisympError as exc:
        print(f"multisymp: {type(exc).__name__}: {exc}", file=err)
        return EXIT_USAGE
    elapsed = time.perf_counter() - start
    if ns.json:
        with open(ns.json, "w") as fh:
            fh.write(rep.to_json())
    text = rep.to_text()
    if ns.quiet:
        text = text.splitlines()[-1]
    print(text, file=out)
    if not ns.quiet:
        print(f"elapsed: {elapsed:.2f}s", file=out)
    if rep.has_undecided:
        print("note: some checks are UNDECIDED", file=out)
    if rep.has_fail:
        return EXIT_FAIL
    if ns.strict and rep.has_undecided:
        return EXIT_UNDECIDED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
