"""Reader for ``.msc`` scene files.

A scene is a sequence of stanzas. A stanza starts with an unindented header
line; indented lines below it form its body. ``#`` starts a comment.

    settings
      seed = 42
      samples = 16
      box = -2 2
      tolerance = 1e-9

    chart plane: q p
    form theta on plane
      dp = q
    form omega on plane
      dq^dp = 1
    form h on plane degree 0
      1 = (q^2 + p^2)/2
    field X on plane
      q = p
      p = -q
    map shift: plane -> plane
      q = q + 1
      p = p
    structure sympl: omega theta
    action trans on sympl
      generators = X Y
      sigma = -1
      const 1 2 1 = 1          # c^1_12 = 1, indices 1-based
      sample g1 = shift | 1 0 ; 0 1
    submanifold S: embedding_map for trans   # 'for' limits which actions 'all' pairs it with
    reduction R
      sub = S
      isotropy = X
      projection = pi
      section = sigma
      action = trans           # or: structure = sympl (skips the momentum-type check)
    lagrangian wave
      base = x y
      fiber = u
      density = (u_x^2 + u_y^2)/2
      section phi = x*y
      symmetry tx = 1, 0 | 0
      symmetry raw_field raw = 1, 0, 0, 0, 0

Form keys are wedges of ``d<coord>`` (``1`` for 0-forms); field keys are
wedges of coordinate names. ``symmetry`` lines give base and fibre
components and are prolonged to the jet chart unless marked ``raw``, in
which case all jet components are listed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import sympy as sp

from .action import GroupSample, LieAlgebraAction
from .errors import ExprSyntaxError, MultisympError, SceneError
from .exterior import DifferentialForm, MultivectorField, SmoothMap, permutation_sign
from .lagfield import FieldSection, LagrangianSystem, prolong_vector_field
from .msgeom import MultisymplecticStructure
from .submfd import ReductionData, Submanifold
from .symexpr import Chart, Settings, using_settings

_NAME = r"[A-Za-z_][A-Za-z0-9_.]*"


@dataclass
class Stanza:
    kind: str
    header: str
    line: int
    body: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class LagrangianEntry:
    system: LagrangianSystem
    sections: dict[str, FieldSection]
    symmetries: dict[str, MultivectorField]
    structure_constants: dict[tuple[int, int, int], sp.Rational]


@dataclass
class Scene:
    path: str
    settings: Settings
    charts: dict[str, Chart] = field(default_factory=dict)
    forms: dict[str, DifferentialForm] = field(default_factory=dict)
    fields: dict[str, MultivectorField] = field(default_factory=dict)
    maps: dict[str, SmoothMap] = field(default_factory=dict)
    structures: dict[str, MultisymplecticStructure] = field(default_factory=dict)
    actions: dict[str, LieAlgebraAction] = field(default_factory=dict)
    submanifolds: dict[str, Submanifold] = field(default_factory=dict)
    reductions: dict[str, ReductionData] = field(default_factory=dict)
    pairings: dict[str, list[str]] = field(default_factory=dict)  # submanifold -> actions
    reduction_actions: dict[str, LieAlgebraAction] = field(default_factory=dict)
    reduction_structures: dict[str, MultisymplecticStructure] = field(default_factory=dict)
    lagrangians: dict[str, LagrangianEntry] = field(default_factory=dict)


def split_stanzas(text: str, path: str = "<scene>") -> list[Stanza]:
    stanzas: list[Stanza] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line[0] in " \t":
            if not stanzas:
                raise SceneError("indented line outside a stanza", path, no)
            stanzas[-1].body.append((no, line.strip()))
        else:
            kind = line.split()[0]
            stanzas.append(Stanza(kind, line[len(kind):].strip(), no))
    return stanzas


class _Builder:
    def __init__(self, path: str, stanzas: list[Stanza], overrides: dict | None):
        self.path = path
        self.stanzas = stanzas
        self.overrides = overrides or {}
        self.scene = Scene(path, Settings())

    def error(self, message: str, line: int) -> SceneError:
        return SceneError(message, self.path, line)

    # -- helpers ---------------------------------------------------------
    def lookup(self, table: str, name: str, line: int):
        objs = getattr(self.scene, table)
        if name not in objs:
            raise self.error(f"unknown {table[:-1]} {name!r}", line)
        return objs[name]

    def declare(self, table: str, name: str, obj, line: int):
        objs = getattr(self.scene, table)
        if name in objs:
            raise self.error(f"duplicate {table[:-1]} {name!r}", line)
        objs[name] = obj

    def expr(self, chart: Chart, text: str, line: int) -> sp.Expr:
        try:
            return chart.parse(text)
        except ExprSyntaxError as exc:
            raise self.error(f"{exc} in {text!r}", line) from exc
        except MultisympError as exc:
            raise self.error(f"{exc} in {text!r}", line) from exc

    def keyvals(self, st: Stanza) -> list[tuple[int, str, str]]:
        out = []
        for no, text in st.body:
            if "=" not in text:
                raise self.error(f"expected 'key = value', got {text!r}", no)
            k, v = text.split("=", 1)
            out.append((no, k.strip(), v.strip()))
        return out

    def match(self, pattern: str, st: Stanza) -> re.Match:
        m = re.fullmatch(pattern, st.header)
        if m is None:
            raise self.error(f"malformed {st.kind} header {st.header!r}", st.line)
        return m

    # -- stanzas -----------------------------------------------------------
    def build(self) -> Scene:
        handlers = {
            "settings": self.settings, "chart": self.chart, "form": self.form, "field": self.field,
            "map": self.map, "structure": self.structure, "action": self.action,
            "submanifold": self.submanifold, "reduction": self.reduction, "lagrangian": self.lagrangian,
        }
        for st in self.stanzas:
            if st.kind not in handlers:
                raise self.error(f"unknown stanza {st.kind!r}", st.line)
        # settings first so every later construction samples with them
        for st in self.stanzas:
            if st.kind == "settings":
                self.settings(st)
        self.scene.settings = replace(self.scene.settings, **self.overrides)
        with using_settings(self.scene.settings):
            for st in self.stanzas:
                if st.kind == "settings":
                    continue
                try:
                    handlers[st.kind](st)
                except SceneError:
                    raise
                except (MultisympError, ValueError, TypeError) as exc:
                    raise self.error(f"{type(exc).__name__}: {exc}", st.line) from exc
        return self.scene

    def settings(self, st: Stanza):
        s = self.scene.settings
        for no, k, v in self.keyvals(st):
            try:
                if k == "seed":
                    s = replace(s, seed=int(v))
                elif k == "samples":
                    s = replace(s, samples=int(v))
                elif k == "box":
                    lo, hi = (float(x) for x in v.split())
                    s = replace(s, box=(lo, hi))
                elif k == "tolerance":
                    s = replace(s, tolerance=float(v))
                elif k == "rank_samples":
                    s = replace(s, rank_samples=int(v))
                else:
                    raise self.error(f"unknown setting {k!r}", no)
            except ValueError as exc:
                if isinstance(exc, SceneError):
                    raise
                raise self.error(f"bad value for {k}: {v!r}", no) from exc
        self.scene.settings = s

    def chart(self, st: Stanza):
        m = self.match(rf"({_NAME})\s*:\s*(.+)", st)
        coords = tuple(m.group(2).split())
        if len(set(coords)) != len(coords):
            raise self.error("repeated coordinate name", st.line)
        self.declare("charts", m.group(1), Chart(m.group(1), coords), st.line)

    def _sparse(self, st: Stanza, cls, prefix: str):
        m = self.match(rf"({_NAME})\s+on\s+({_NAME})(?:\s+degree\s+(\d+))?", st)
        chart = self.lookup("charts", m.group(2), st.line)
        degree = int(m.group(3)) if m.group(3) else None
        terms = {}
        for no, key, value in self.keyvals(st):
            if key == "1":
                names = []
            else:
                names = [p.strip() for p in key.split("^")]
                if prefix:
                    if not all(n.startswith(prefix) for n in names):
                        raise self.error(f"form basis {key!r} must be a wedge of d<coord>", no)
                    names = [n[len(prefix):] for n in names]
            try:
                idx = [chart.index(n) for n in names]
            except MultisympError as exc:
                raise self.error(str(exc), no) from exc
            if len(set(idx)) != len(idx):
                raise self.error(f"repeated factor in {key!r}", no)
            if degree is None:
                degree = len(idx)
            elif degree != len(idx):
                raise self.error(f"term {key!r} does not have degree {degree}", no)
            sign = permutation_sign(idx)
            key_idx = tuple(sorted(idx))
            terms[key_idx] = terms.get(key_idx, 0) + sign * self.expr(chart, value, no)
        if degree is None:
            raise self.error("empty body needs an explicit degree", st.line)
        return m.group(1), cls(chart, degree, terms)

    def form(self, st: Stanza):
        name, obj = self._sparse(st, DifferentialForm, "d")
        self.declare("forms", name, obj, st.line)

    def field(self, st: Stanza):
        name, obj = self._sparse(st, MultivectorField, "")
        self.declare("fields", name, obj, st.line)

    def map(self, st: Stanza):
        m = self.match(rf"({_NAME})\s*:\s*({_NAME})\s*->\s*({_NAME})", st)
        src = self.lookup("charts", m.group(2), st.line)
        tgt = self.lookup("charts", m.group(3), st.line)
        comps = {}
        for no, key, value in self.keyvals(st):
            if key not in tgt.coords:
                raise self.error(f"{key!r} is not a coordinate of {tgt.name}", no)
            comps[key] = self.expr(src, value, no)
        missing = [c for c in tgt.coords if c not in comps]
        if missing:
            raise self.error(f"map {m.group(1)} is missing components {missing}", st.line)
        self.declare("maps", m.group(1), SmoothMap(src, tgt, [comps[c] for c in tgt.coords]), st.line)

    def structure(self, st: Stanza):
        m = self.match(rf"({_NAME})\s*:\s*({_NAME})(?:\s+({_NAME}))?", st)
        omega = self.lookup("forms", m.group(2), st.line)
        theta = self.lookup("forms", m.group(3), st.line) if m.group(3) else None
        self.declare("structures", m.group(1), MultisymplecticStructure(omega, theta), st.line)

    def action(self, st: Stanza):
        m = self.match(rf"({_NAME})\s+on\s+({_NAME})", st)
        ms = self.lookup("structures", m.group(2), st.line)
        names, sigma, consts, samples = [], -1, {}, []
        for no, key, value in self.keyvals(st):
            words = key.split()
            if key == "generators":
                names = value.split()
            elif key == "sigma":
                if value not in ("1", "+1", "-1"):
                    raise self.error("sigma must be +1 or -1", no)
                sigma = int(value)
            elif words[0] == "const" and len(words) == 4:
                i, j, l = (int(w) - 1 for w in words[1:])
                consts[(i, j, l)] = sp.Rational(value)
            elif words[0] == "sample" and len(words) == 2:
                if "|" not in value:
                    raise self.error("sample needs 'map | ad rows'", no)
                map_name, rows = (p.strip() for p in value.split("|", 1))
                phi = self.lookup("maps", map_name, no)
                ad = [[sp.Rational(x) for x in row.split()] for row in rows.split(";")]
                samples.append(GroupSample(words[1], phi, ad))
            else:
                raise self.error(f"unknown action key {key!r}", no)
        gens = [self.lookup("fields", n, st.line) for n in names]
        for s in samples:
            if len(s.ad) != len(gens) or any(len(r) != len(gens) for r in s.ad):
                raise self.error(f"sample {s.name}: adjoint matrix must be {len(gens)}x{len(gens)}", st.line)
        a = LieAlgebraAction(ms, gens, consts, sigma, samples, names)
        self.declare("actions", m.group(1), a, st.line)

    def submanifold(self, st: Stanza):
        m = self.match(rf"({_NAME})\s*:\s*({_NAME})(?:\s+for\s+(.+))?", st)
        emb = self.lookup("maps", m.group(2), st.line)
        self.declare("submanifolds", m.group(1), Submanifold(emb), st.line)
        if m.group(3):
            for a in m.group(3).split():
                self.lookup("actions", a, st.line)
            self.scene.pairings[m.group(1)] = m.group(3).split()

    def reduction(self, st: Stanza):
        m = self.match(rf"({_NAME})", st)
        kv = {k: (no, v) for no, k, v in self.keyvals(st)}
        for need in ("sub", "projection", "section"):
            if need not in kv:
                raise self.error(f"reduction needs '{need}'", st.line)
        sub = self.lookup("submanifolds", kv["sub"][1], kv["sub"][0])
        iso = [self.lookup("fields", n, kv["isotropy"][0]) for n in kv.get("isotropy", (0, ""))[1].split()]
        rd = ReductionData(sub, iso, self.lookup("maps", kv["projection"][1], kv["projection"][0]),
                           self.lookup("maps", kv["section"][1], kv["section"][0]))
        self.declare("reductions", m.group(1), rd, st.line)
        if "action" in kv:
            a = self.lookup("actions", kv["action"][1], kv["action"][0])
            self.scene.reduction_actions[m.group(1)] = a
            self.scene.reduction_structures[m.group(1)] = a.ms
        elif "structure" in kv:
            ms = self.lookup("structures", kv["structure"][1], kv["structure"][0])
            self.scene.reduction_structures[m.group(1)] = ms
        else:
            raise self.error("reduction needs 'action' or 'structure'", st.line)

    def lagrangian(self, st: Stanza):
        m = self.match(rf"({_NAME})", st)
        entries = self.keyvals(st)
        kv = {k: (no, v) for no, k, v in entries}
        for need in ("base", "fiber", "density"):
            if need not in kv:
                raise self.error(f"lagrangian needs '{need}'", st.line)
        ls = LagrangianSystem(tuple(kv["base"][1].split()), tuple(kv["fiber"][1].split()),
                              self.expr(_jet_chart(kv), kv["density"][1], kv["density"][0]))
        sections, syms, consts = {}, {}, {}
        for no, key, value in entries:
            words = key.split()
            if words[0] == "section" and len(words) == 2:
                comps = [self.expr(ls.base_chart, c.strip(), no) for c in value.split(";")]
                if len(comps) != ls.f:
                    raise self.error(f"section needs {ls.f} components", no)
                sections[words[1]] = FieldSection(ls, comps)
            elif words[0] == "symmetry" and len(words) in (2, 3):
                if len(words) == 3:
                    if words[2] != "raw":
                        raise self.error(f"unknown symmetry flag {words[2]!r}", no)
                    comps = [self.expr(ls.jet, c.strip(), no) for c in value.split(",")]
                    if len(comps) != ls.jet.dim:
                        raise self.error(f"raw symmetry needs {ls.jet.dim} components", no)
                    syms[words[1]] = MultivectorField.vector(ls.jet, comps)
                else:
                    if "|" not in value:
                        raise self.error("symmetry needs 'base comps | fibre comps'", no)
                    b, f = value.split("|", 1)
                    base = [self.expr(ls.jet, c.strip(), no) for c in b.split(",")]
                    fib = [self.expr(ls.jet, c.strip(), no) for c in f.split(",")]
                    if len(base) != ls.k or len(fib) != ls.f:
                        raise self.error("wrong number of symmetry components", no)
                    syms[words[1]] = prolong_vector_field(ls, base, fib)
            elif words[0] == "const" and len(words) == 4:
                i, j, l = (int(w) - 1 for w in words[1:])
                consts[(i, j, l)] = sp.Rational(value)
            elif key not in ("base", "fiber", "density"):
                raise self.error(f"unknown lagrangian key {key!r}", no)
        self.declare("lagrangians", m.group(1), LagrangianEntry(ls, sections, syms, consts), st.line)


def _jet_chart(kv) -> Chart:
    base, fiber = kv["base"][1].split(), kv["fiber"][1].split()
    derivs = [LagrangianSystem.derivative_name(u, x) for u in fiber for x in base]
    return Chart("J1", tuple(base + fiber + derivs))


def parse_scene(text: str, path: str = "<scene>", overrides: dict | None = None) -> Scene:
    """Parse and resolve a scene; ``overrides`` replace fields of the settings stanza."""
    return _Builder(path, split_stanzas(text, path), overrides).build()


def load_scene(path: str | Path, overrides: dict | None = None) -> Scene:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene: {exc.strerror}", str(path)) from exc
    return parse_scene(text, p.name, overrides)
