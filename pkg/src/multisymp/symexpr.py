"""Exact scalar expressions on coordinate charts.

Expressions are plain :mod:`sympy` expressions built from exact rationals,
chart coordinate symbols, ``+ - * /``, integer powers and ``sin cos exp ln``.
This module owns the text grammar, canonicalization and the three-valued
zero test every equation check in the package goes through.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
import enum
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import sympy as sp

from .errors import EvaluationError, ExprSyntaxError, UnknownSymbol

ScalarExpr = sp.Expr

__all__ = [
    "Chart",
    "ScalarExpr",
    "Settings",
    "ZeroTest",
    "current_settings",
    "differentiate",
    "evaluate",
    "is_zero",
    "normalize",
    "parse",
    "sample_points",
    "to_text",
    "using_settings",
]


@dataclass(frozen=True)
class Settings:
    seed: int = 42
    samples: int = 16
    box: tuple[float, float] = (-2.0, 2.0)
    tolerance: float = 1e-9
    # points per rank/immersion check in submanifold code
    rank_samples: int = 8


_SETTINGS: contextvars.ContextVar[Settings] = contextvars.ContextVar("settings", default=Settings())


def current_settings() -> Settings:
    return _SETTINGS.get()


@contextlib.contextmanager
def using_settings(settings: Settings):
    token = _SETTINGS.set(settings)
    try:
        yield settings
    finally:
        _SETTINGS.reset(token)


class ZeroTest(enum.Enum):
    ZERO = "ZERO"
    NONZERO = "NONZERO"
    UNDECIDED = "UNDECIDED"

    def __bool__(self) -> bool:  # guard against `if is_zero(e):`
        raise TypeError("ZeroTest is three-valued; compare against ZeroTest members")

    @staticmethod
    def combine(results: Iterable["ZeroTest"]) -> "ZeroTest":
        """All ZERO -> ZERO; any NONZERO -> NONZERO; otherwise UNDECIDED."""
        seen_undecided = False
        for r in results:
            if r is ZeroTest.NONZERO:
                return ZeroTest.NONZERO
            if r is ZeroTest.UNDECIDED:
                seen_undecided = True
        return ZeroTest.UNDECIDED if seen_undecided else ZeroTest.ZERO


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "ln": sp.log}
_RESERVED = set(FUNCTIONS)


@dataclass(frozen=True)
class Chart:
    name: str
    coords: tuple[str, ...]
    symbols: tuple[sp.Symbol, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise ValueError(f"chart {self.name!r} needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError(f"chart {self.name!r} has repeated coordinate names")
        for c in coords:
            if not _IDENT.match(c) or c in _RESERVED:
                raise ValueError(f"invalid coordinate name {c!r}")
        object.__setattr__(self, "symbols", tuple(sp.Symbol(c, real=True) for c in coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def symbol(self, name: str) -> sp.Symbol:
        try:
            return self.symbols[self.coords.index(name)]
        except ValueError:
            raise UnknownSymbol(name) from None

    def index(self, coord: str | sp.Symbol) -> int:
        name = coord.name if isinstance(coord, sp.Symbol) else coord
        try:
            return self.coords.index(name)
        except ValueError:
            raise UnknownSymbol(name) from None

    def check(self, e: sp.Expr) -> sp.Expr:
        """Raise UnknownSymbol if ``e`` uses a symbol outside this chart."""
        allowed = set(self.symbols)
        for s in sorted(e.free_symbols, key=lambda s: s.name):
            if s not in allowed:
                raise UnknownSymbol(s.name)
        return e

    def parse(self, text: str, constants: Mapping[str, object] | None = None) -> sp.Expr:
        return parse(text, self, constants)


# --------------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else m.end()
        num, ident, op = m.groups()
        if num is not None:
            if "." in num:
                raise ExprSyntaxError("floating literal not allowed", text, start, "integer")
            tokens.append(("num", num, start))
        elif ident is not None:
            tokens.append(("ident", ident, start))
        elif op is not None:
            if op not in "+-*/^()":
                raise ExprSyntaxError(f"unexpected character {op!r}", text, start, "operator or operand")
            tokens.append((op, op, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Mapping[str, sp.Expr]):
        self.text = text
        self.names = names
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str | None = None, expected: str | None = None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            raise ExprSyntaxError(
                f"unexpected {tok[1]!r}" if tok[0] != "end" else "unexpected end of input",
                self.text, tok[2], expected or repr(kind))
        self.i += 1
        return tok

    def parse(self) -> sp.Expr:
        e = self.expr()
        self.take("end", "operator or end of input")
        return e

    def expr(self) -> sp.Expr:
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> sp.Expr:
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self) -> sp.Expr:
        if self.peek()[0] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> sp.Expr:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return base ** self.exponent()
        return base

    def exponent(self) -> int:
        sign = 1
        paren = False
        if self.peek()[0] == "(":
            self.take()
            paren = True
        if self.peek()[0] in ("+", "-"):
            sign = -1 if self.take()[0] == "-" else 1
        tok = self.take("num", "integer exponent")
        if paren:
            self.take(")", "')'")
        return sign * int(tok[1])

    def atom(self) -> sp.Expr:
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return sp.Integer(int(tok[1]))
        if tok[0] == "(":
            self.take()
            e = self.expr()
            self.take(")", "')'")
            return e
        if tok[0] == "ident":
            self.take()
            name = tok[1]
            if name in FUNCTIONS:
                self.take("(", f"'(' after {name}")
                arg = self.expr()
                self.take(")", "')'")
                return FUNCTIONS[name](arg)
            if name not in self.names:
                raise UnknownSymbol(name)
            return self.names[name]
        what = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ExprSyntaxError(f"unexpected {what}", self.text, tok[2], "number, identifier or '('")


def parse(text: str, chart: Chart, constants: Mapping[str, object] | None = None) -> sp.Expr:
    """Parse ``text`` in the expression grammar against ``chart``.

    ``constants`` maps extra identifiers to exact rational values.
    """
    names: dict[str, sp.Expr] = {c: s for c, s in zip(chart.coords, chart.symbols)}
    for k, v in (constants or {}).items():
        if k in names:
            raise ValueError(f"constant {k!r} shadows a coordinate")
        names[k] = sp.Rational(str(v)) if not isinstance(v, sp.Basic) else v
    return _Parser(text, names).parse()


# -------------------------------------------------------------------- printer

def to_text(e: sp.Expr) -> str:
    """Render ``e`` in the package grammar so that ``parse`` reads it back."""
    return _print(sp.sympify(e), 0)


_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _wrap(s: str, inner: int, outer: int) -> str:
    return f"({s})" if inner < outer else s


def _print(e: sp.Basic, outer: int) -> str:
    if e.is_Integer:
        s = str(e)
        return _wrap(s, _PREC_NEG if e < 0 else _PREC_ATOM, outer)
    if e.is_Rational:
        s = f"{e.p}/{e.q}"
        return _wrap(s, _PREC_NEG if e < 0 else _PREC_MUL, outer)
    if e.is_Symbol:
        return e.name
    if e is sp.E:
        return "exp(1)"
    if isinstance(e, sp.Add):
        terms = sp.Add.make_args(e)
        terms = sorted(terms, key=sp.default_sort_key)
        out = _print(terms[0], _PREC_ADD)
        for t in terms[1:]:
            coeff, rest = t.as_coeff_Mul()
            if coeff.is_negative:
                out += " - " + _print(-t, _PREC_MUL)
            else:
                out += " + " + _print(t, _PREC_MUL)
        return _wrap(out, _PREC_ADD, outer)
    if isinstance(e, sp.Mul):
        coeff, rest = e.as_coeff_Mul()
        if coeff.is_negative:
            return _wrap("-" + _print(-e, _PREC_POW), _PREC_NEG, outer)
        num, den = sp.fraction(e, exact=True)
        if den != 1:
            s = _print(num, _PREC_MUL) + "/" + _print(den, _PREC_POW)
            return _wrap(s, _PREC_MUL, outer)
        factors = sorted(sp.Mul.make_args(e), key=sp.default_sort_key)
        s = "*".join(_print(f, _PREC_MUL + 1) for f in factors)
        return _wrap(s, _PREC_MUL, outer)
    if isinstance(e, sp.Pow):
        base, ex = e.as_base_exp()
        if ex.is_Integer:
            if ex < 0:
                s = "1/" + _print(base ** (-ex), _PREC_POW)
                return _wrap(s, _PREC_MUL, outer)
            return _wrap(_print(base, _PREC_ATOM) + "^" + str(ex), _PREC_POW, outer)
        if base is sp.E:
            return f"exp({_print(ex, 0)})"
        raise ValueError(f"non-integer power cannot be printed in the grammar: {e}")
    if isinstance(e, sp.exp):
        return f"exp({_print(e.args[0], 0)})"
    if isinstance(e, sp.log):
        return f"ln({_print(e.args[0], 0)})"
    if isinstance(e, (sp.sin, sp.cos)):
        return f"{e.func.__name__}({_print(e.args[0], 0)})"
    raise ValueError(f"expression outside the supported grammar: {e}")


# ----------------------------------------------------------- canonicalization

def _is_cos_power(x) -> bool:
    return (x.is_Pow and isinstance(x.base, sp.cos) and x.exp.is_Integer
            and abs(int(x.exp)) >= 2)


def _cos_power(x):
    n = int(x.exp)
    c = x.base
    s2 = sp.sin(c.args[0]) ** 2
    q, r = divmod(abs(n), 2)
    out = (1 - s2) ** q * c ** r
    return out if n > 0 else 1 / out


def _rewrite_kernels(e: sp.Expr) -> sp.Expr:
    if e.is_Atom:
        return e
    args = [_rewrite_kernels(a) for a in e.args]
    if isinstance(e, (sp.sin, sp.cos, sp.exp, sp.log)):
        arg = normalize(args[0])
        if isinstance(e, sp.exp):
            return sp.expand_power_exp(sp.exp(arg))
        if isinstance(e, sp.log):
            return sp.expand_log(sp.log(arg), force=True)
        return e.func(arg)
    return e.func(*args)


def normalize(e) -> sp.Expr:
    """Canonical form: a reduced quotient of expanded polynomials.

    Transcendental subterms act as independent kernels after their arguments
    are normalized. Rewrites applied: ``cos(u)^2 -> 1 - sin(u)^2``,
    ``exp(a+b) -> exp(a)*exp(b)``, ``ln(a*b) -> ln(a) + ln(b)``.
    The last one holds wherever both sides are defined.
    """
    e = sp.sympify(e)
    if e.is_Rational:
        return e
    if e.is_polynomial():
        return _expand_polynomial(e)
    e = _rewrite_kernels(e)
    for _ in range(6):
        if e.has(sp.cos):
            e = e.replace(_is_cos_power, _cos_power)
        new = sp.cancel(sp.together(e))
        if new == e:
            break
        e = new
    return e


@functools.lru_cache(maxsize=256)
def _ring(gens: tuple[sp.Symbol, ...]):
    return sp.ring(gens, sp.QQ)[0]


def _expand_polynomial(e: sp.Expr) -> sp.Expr:
    """Expand via sparse dict arithmetic, which is much faster than ``sp.expand``."""
    gens = tuple(sorted(e.free_symbols, key=lambda s: s.name))
    if not gens:
        return sp.expand(e)
    try:
        return _ring(gens).from_expr(e).as_expr()
    except (ValueError, sp.CoercionFailed):
        # irrational constant coefficients such as exp(1)
        return sp.expand(e)


def as_polynomial(e: sp.Expr, gens: tuple[sp.Symbol, ...]):
    """``e`` as an element of the sparse ring QQ[gens], or None if it is not one."""
    try:
        return _ring(tuple(gens)).from_expr(e)
    except (ValueError, sp.CoercionFailed):
        return None


def differentiate(e: sp.Expr, coord: str | sp.Symbol, chart: Chart | None = None) -> sp.Expr:
    """Partial derivative with respect to ``coord``, canonicalized."""
    if isinstance(coord, str):
        if chart is None:
            raise TypeError("coordinate name given without a chart")
        coord = chart.symbol(coord)
    elif chart is not None and coord not in chart.symbols:
        raise UnknownSymbol(coord.name)
    return normalize(sp.diff(e, coord))


# ----------------------------------------------------------------- evaluation

def _exact_value(e: sp.Expr, point: Mapping[sp.Symbol, sp.Rational]):
    v = e.xreplace(dict(point))
    if v.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise EvaluationError(f"pole of {e} at {dict(point)}")
    if v.is_Rational:
        return v
    for lg in v.atoms(sp.log):
        arg = lg.args[0]
        n = arg.evalf(30)
        if n.is_real is False or (n.is_number and n.is_extended_real and n <= 0):
            raise EvaluationError(f"ln of non-positive value in {e}")
    n = v.evalf(40)
    if not n.is_number:
        raise EvaluationError(f"could not evaluate {e}")
    re_, im = n.as_real_imag()
    if abs(im) > 1e-30:
        raise EvaluationError(f"non-real value for {e}")
    if re_.has(sp.zoo, sp.nan):
        raise EvaluationError(f"pole of {e}")
    return re_


def evaluate(e: sp.Expr, point: Mapping) -> float:
    """Evaluate at a point given as ``{coord name or symbol: rational}``."""
    e = sp.sympify(e)
    subs = {}
    for k, v in point.items():
        sym = sp.Symbol(k, real=True) if isinstance(k, str) else k
        subs[sym] = sp.Rational(str(v)) if isinstance(v, (str, float)) else sp.Rational(v)
    missing = e.free_symbols - set(subs)
    if missing:
        raise EvaluationError(f"point does not bind {sorted(s.name for s in missing)}")
    return float(_exact_value(e, subs))


def _random_rational(rng: random.Random, box: tuple[float, float]) -> sp.Rational:
    lo, hi = box
    den = 97
    return sp.Rational(rng.randint(int(lo * den), int(hi * den)), den)


def sample_points(symbols: Iterable[sp.Symbol], count: int | None = None,
                  settings: Settings | None = None, salt: int = 0) -> list[dict]:
    """Deterministic rational sample points inside the settings box."""
    settings = settings or current_settings()
    count = settings.samples if count is None else count
    syms = sorted(set(symbols), key=lambda s: s.name)
    rng = random.Random(settings.seed * 1_000_003 + salt)
    return [{s: _random_rational(rng, settings.box) for s in syms} for _ in range(count)]


def is_zero(e, settings: Settings | None = None) -> ZeroTest:
    """Three-valued zero test.

    ZERO only when canonicalization yields the literal 0. NONZERO when some
    sample point gives a value above tolerance. UNDECIDED otherwise.
    """
    e = sp.sympify(e)
    if e.is_Rational:
        return ZeroTest.ZERO if e == 0 else ZeroTest.NONZERO
    if normalize(e) == 0:
        return ZeroTest.ZERO
    settings = settings or current_settings()
    syms = sorted(e.free_symbols, key=lambda s: s.name)
    rng = random.Random(settings.seed)
    good = attempts = 0
    while good < settings.samples and attempts < 8 * settings.samples:
        attempts += 1
        point = {s: _random_rational(rng, settings.box) for s in syms}
        try:
            v = _exact_value(e, point)
        except EvaluationError:
            continue
        good += 1
        if abs(v) > settings.tolerance:
            return ZeroTest.NONZERO
    if good == 0:
        raise EvaluationError(f"no admissible sample point for {e} in box {settings.box}")
    return ZeroTest.UNDECIDED
