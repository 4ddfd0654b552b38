"""Scalar generating symbols on [-pi, pi]: parsing, evaluation, Fourier analysis.

Grammar (``t`` is the angle variable)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary | '*' ind(lo, hi))*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | 't' | 'pi' | '(' expr ')'
             | cos(h) | sin(h) | abs(expr) | sqrt(expr) | ind(lo, hi)
    h       := 't' | INT '*' 't' | 't' '*' INT

``X*ind(lo,hi)`` restricts the preceding factor ``X`` to ``[lo, hi]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Const", "Theta", "Cos", "Sin", "Abs", "Pow", "Sum", "Prod", "Scale", "Indicator",
    "SymbolExpr", "FourierSeries", "SymbolSyntaxError", "SymbolDomainError",
    "parse_symbol", "to_text", "eval_symbol", "evaluate", "is_trig_polynomial",
    "fourier_coefficients", "essinf_probe", "midpoint_grid", "DEFAULT_RESOLUTION",
]

DEFAULT_RESOLUTION = 2**14


class SymbolSyntaxError(ValueError):
    """Malformed symbol text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class SymbolDomainError(ValueError):
    pass


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Theta:
    pass


@dataclass(frozen=True)
class Cos:
    harmonic: int


@dataclass(frozen=True)
class Sin:
    harmonic: int


@dataclass(frozen=True)
class Abs:
    child: "SymbolExpr"


@dataclass(frozen=True)
class Pow:
    child: "SymbolExpr"
    exponent: float


@dataclass(frozen=True)
class Sum:
    children: tuple


@dataclass(frozen=True)
class Prod:
    children: tuple


@dataclass(frozen=True)
class Scale:
    factor: float
    child: "SymbolExpr"


@dataclass(frozen=True)
class Indicator:
    lo: float
    hi: float
    child: "SymbolExpr"


SymbolExpr = Union[Const, Theta, Cos, Sin, Abs, Pow, Sum, Prod, Scale, Indicator]


def _has_theta(node):
    if isinstance(node, (Theta, Cos, Sin)):
        return True
    if isinstance(node, Const):
        return False
    if isinstance(node, (Sum, Prod)):
        return any(_has_theta(c) for c in node.children)
    if isinstance(node, Indicator):
        return True
    return _has_theta(node.child)


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)
_FUNCS = {"cos", "sin", "abs", "sqrt", "ind"}


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise SymbolSyntaxError(f"unexpected character {text[off]!r}", off)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


def _negate(node):
    if isinstance(node, Const):
        return Const(-node.value)
    if isinstance(node, Scale):
        return Scale(-node.factor, node.child)
    return Scale(-1.0, node)


def _combine_factors(factors):
    coef = 1.0
    rest = []
    for f in factors:
        if isinstance(f, Const):
            coef *= f.value
        else:
            rest.append(f)
    if not rest:
        return Const(coef)
    if len(rest) == 1:
        body = rest[0]
        if isinstance(body, Scale):
            return Scale(coef * body.factor, body.child) if coef != 1.0 else body
    else:
        body = Prod(tuple(rest))
    return body if coef == 1.0 else Scale(coef, body)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text:
            got = self.tok.text or "end of input"
            raise SymbolSyntaxError(f"expected {text!r}, got {got!r}", self.tok.offset)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise SymbolSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self):
        terms = [self.term()]
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            t = self.term()
            terms.append(_negate(t) if op == "-" else t)
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors = [self.unary()]
        while self.tok.text in ("*", "/"):
            op = self.advance()
            if op.text == "*" and self.tok.text == "ind":
                lo, hi = self.indicator_bounds()
                factors = [Indicator(lo, hi, _combine_factors(factors))]
                continue
            start = self.tok.offset
            f = self.unary()
            if op.text == "*":
                factors.append(f)
            elif isinstance(f, Const):
                if f.value == 0.0:
                    raise SymbolSyntaxError("division by zero", start)
                factors.append(Const(1.0 / f.value))
            else:
                factors.append(Pow(f, -1.0))
        return _combine_factors(factors)

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return _negate(self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.text == "^":
            self.advance()
            start = self.tok.offset
            exponent = self.constant_value(self.unary(), start)
            if isinstance(base, Const):
                return Const(_pow_scalar(base.value, exponent))
            return Pow(base, exponent)
        return base

    def constant_value(self, node, offset):
        if _has_theta(node):
            raise SymbolSyntaxError("expected a constant expression", offset)
        return float(evaluate(node, np.array([0.0]))[0])

    def indicator_bounds(self):
        start = self.expect("ind").offset
        self.expect("(")
        off = self.tok.offset
        lo = self.constant_value(self.expr(), off)
        self.expect(",")
        off = self.tok.offset
        hi = self.constant_value(self.expr(), off)
        self.expect(")")
        eps = 1e-12
        if not (-math.pi - eps <= lo <= math.pi + eps and -math.pi - eps <= hi <= math.pi + eps):
            raise SymbolSyntaxError("indicator bounds must lie in [-pi, pi]", start)
        if lo > hi:
            raise SymbolSyntaxError("indicator lower bound exceeds upper bound", start)
        return lo, hi

    def harmonic(self):
        # accepts t, m*t, t*m with m a positive integer literal
        start = self.tok.offset
        mult = None
        if self.tok.kind == "num":
            mult = self.advance().text
            self.expect("*")
            self.expect("t")
        else:
            self.expect("t")
            if self.tok.text == "*":
                self.advance()
                if self.tok.kind != "num":
                    raise SymbolSyntaxError("harmonic multiplier must be a positive integer", start)
                mult = self.advance().text
        if mult is None:
            return 1
        value = float(mult)
        if value != int(value) or value < 1:
            raise SymbolSyntaxError(f"non-integer harmonic multiplier {mult!r}", start)
        return int(value)

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            if tok.text == "t":
                self.advance()
                return Theta()
            if tok.text == "pi":
                self.advance()
                return Const(math.pi)
            if tok.text == "ind":
                lo, hi = self.indicator_bounds()
                return Indicator(lo, hi, Const(1.0))
            if tok.text in _FUNCS:
                self.advance()
                self.expect("(")
                if tok.text in ("cos", "sin"):
                    h = self.harmonic()
                    node = Cos(h) if tok.text == "cos" else Sin(h)
                else:
                    arg = self.expr()
                    if tok.text == "abs":
                        node = Const(abs(arg.value)) if isinstance(arg, Const) else Abs(arg)
                    elif isinstance(arg, Const):
                        node = Const(_pow_scalar(arg.value, 0.5))
                    else:
                        node = Pow(arg, 0.5)
                self.expect(")")
                return node
            raise SymbolSyntaxError(f"unknown name {tok.text!r}", tok.offset)
        raise SymbolSyntaxError(f"unexpected {tok.text or 'end of input'!r}", tok.offset)


def _pow_scalar(base, exponent):
    if base < 0 and exponent != int(exponent):
        raise SymbolDomainError(f"fractional power {exponent} of negative value {base}")
    return float(base**exponent)


def parse_symbol(text: str) -> SymbolExpr:
    """Parse symbol text into an expression tree."""
    return _Parser(text).parse()


def to_text(node) -> str:
    """Render ``node`` so that ``parse_symbol(to_text(node)) == node``."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Theta):
        return "t"
    if isinstance(node, (Cos, Sin)):
        name = "cos" if isinstance(node, Cos) else "sin"
        return f"{name}(t)" if node.harmonic == 1 else f"{name}({node.harmonic}*t)"
    if isinstance(node, Abs):
        return f"abs({to_text(node.child)})"
    if isinstance(node, Pow):
        return f"({to_text(node.child)})^({float(node.exponent)!r})"
    if isinstance(node, Sum):
        return "(" + " + ".join(to_text(c) for c in node.children) + ")"
    if isinstance(node, Prod):
        return "(" + "*".join(f"({to_text(c)})" for c in node.children) + ")"
    if isinstance(node, Scale):
        return f"{float(node.factor)!r}*({to_text(node.child)})"
    if isinstance(node, Indicator):
        return f"(({to_text(node.child)})*ind({float(node.lo)!r},{float(node.hi)!r}))"
    raise TypeError(f"not a symbol node: {node!r}")


# --- evaluation ------------------------------------------------------------


def evaluate(node, theta):
    """Vectorized evaluation of ``node`` on an array of angles."""
    theta = np.asarray(theta, dtype=float)
    if isinstance(node, Const):
        return np.full(theta.shape, float(node.value))
    if isinstance(node, Theta):
        return theta.copy()
    if isinstance(node, Cos):
        return np.cos(node.harmonic * theta)
    if isinstance(node, Sin):
        return np.sin(node.harmonic * theta)
    if isinstance(node, Abs):
        return np.abs(evaluate(node.child, theta))
    if isinstance(node, Pow):
        base = evaluate(node.child, theta)
        e = node.exponent
        if e != int(e):
            if np.any(base < 0):
                bad = float(theta.flat[np.argmax(base < 0)])
                raise SymbolDomainError(
                    f"fractional power {e} of negative value at theta={bad:.6g}"
                )
        elif e < 0 and np.any(base == 0):
            raise SymbolDomainError("negative power of zero")
        return base**e
    if isinstance(node, Sum):
        out = np.zeros(theta.shape)
        for c in node.children:
            out = out + evaluate(c, theta)
        return out
    if isinstance(node, Prod):
        out = np.ones(theta.shape)
        for c in node.children:
            out = out * evaluate(c, theta)
        return out
    if isinstance(node, Scale):
        return node.factor * evaluate(node.child, theta)
    if isinstance(node, Indicator):
        inside = (theta >= node.lo) & (theta <= node.hi)
        return np.where(inside, evaluate(node.child, theta), 0.0)
    raise TypeError(f"not a symbol node: {node!r}")


def eval_symbol(expr, theta: float) -> float:
    if isinstance(expr, str):
        expr = parse_symbol(expr)
    if not -math.pi <= theta <= math.pi:
        raise ValueError(f"theta={theta} outside [-pi, pi]")
    return float(evaluate(expr, np.array([theta]))[0])


def midpoint_grid(size):
    """``size`` midpoints of a uniform partition of [-pi, pi]."""
    h = 2 * math.pi / size
    return -math.pi + (np.arange(size) + 0.5) * h


def essinf_probe(expr, gridsize: int = 1024):
    """(min, max) of ``expr`` on a midpoint grid.

    A heuristic witness for ess inf / ess sup, not a proof.
    """
    if gridsize < 2:
        raise ValueError("gridsize must be >= 2")
    if isinstance(expr, str):
        expr = parse_symbol(expr)
    vals = evaluate(expr, midpoint_grid(gridsize))
    return float(vals.min()), float(vals.max())


# --- Fourier coefficients --------------------------------------------------


@dataclass(frozen=True)
class FourierSeries:
    """Coefficients ``t_k`` for ``-maxlag <= k <= maxlag``.

    ``exact`` is True when the coefficients come from the analytic
    expansion of a trigonometric polynomial; then lags beyond ``maxlag``
    are exactly zero.
    """

    values: np.ndarray = field(repr=False)
    maxlag: int
    exact: bool
    resolution: int | None = None

    def __getitem__(self, k):
        if abs(k) > self.maxlag:
            if self.exact:
                return 0j
            raise KeyError(f"lag {k} beyond maxlag={self.maxlag} of a quadrature series")
        return complex(self.values[k + self.maxlag])

    def lags(self, lo, hi):
        """Coefficients for lags ``lo..hi`` inclusive as an array."""
        ks = np.arange(lo, hi + 1)
        out = np.zeros(len(ks), dtype=complex)
        inside = np.abs(ks) <= self.maxlag
        if not np.all(inside) and not self.exact:
            raise KeyError(f"lags [{lo}, {hi}] exceed maxlag={self.maxlag} of a quadrature series")
        out[inside] = self.values[ks[inside] + self.maxlag]
        return out

    def as_dict(self):
        return {k: self[k] for k in range(-self.maxlag, self.maxlag + 1)}


def is_trig_polynomial(node):
    if isinstance(node, (Const, Cos, Sin)):
        return True
    if isinstance(node, Scale):
        return is_trig_polynomial(node.child)
    if isinstance(node, Sum):
        return all(is_trig_polynomial(c) for c in node.children)
    return False


def _trig_terms(node, weight, acc):
    if isinstance(node, Const):
        acc[0] = acc.get(0, 0j) + weight * node.value
    elif isinstance(node, Cos):
        m = node.harmonic
        acc[m] = acc.get(m, 0j) + weight / 2
        acc[-m] = acc.get(-m, 0j) + weight / 2
    elif isinstance(node, Sin):
        m = node.harmonic
        acc[m] = acc.get(m, 0j) - 0.5j * weight
        acc[-m] = acc.get(-m, 0j) + 0.5j * weight
    elif isinstance(node, Scale):
        _trig_terms(node.child, weight * node.factor, acc)
    else:
        for c in node.children:
            _trig_terms(c, weight, acc)


def fourier_coefficients(expr, maxlag: int, resolution: int = DEFAULT_RESOLUTION,
                         analytic: bool = True) -> FourierSeries:
    """Fourier coefficients ``(1/2pi) int f(t) exp(-ikt) dt`` for ``|k| <= maxlag``.

    Trigonometric polynomials are expanded exactly (unless ``analytic`` is
    False). Anything else is sampled at ``resolution`` midpoints and
    transformed with the FFT.
    """
    if isinstance(expr, str):
        expr = parse_symbol(expr)
    if maxlag < 0:
        raise ValueError("maxlag must be nonnegative")
    if analytic and is_trig_polynomial(expr):
        acc = {}
        _trig_terms(expr, 1.0, acc)
        values = np.zeros(2 * maxlag + 1, dtype=complex)
        for k, v in acc.items():
            if abs(k) <= maxlag:
                values[k + maxlag] = v
        return FourierSeries(values, maxlag, True)

    if resolution < 4 * maxlag or resolution < 4 or resolution & (resolution - 1):
        raise ValueError(
            f"resolution must be a power of two >= max(4, 4*maxlag), got {resolution}"
        )
    samples = evaluate(expr, midpoint_grid(resolution))
    spectrum = np.fft.fft(samples) / resolution
    ks = np.arange(-maxlag, maxlag + 1)
    h = 2 * math.pi / resolution
    # grid starts at -pi + h/2, so undo that offset in the phase
    values = spectrum[ks % resolution] * np.exp(1j * ks * (math.pi - h / 2))
    return FourierSeries(values, maxlag, False, resolution)
