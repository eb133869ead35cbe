"""Expression language for holomorphic maps of one complex variable.

Grammar (whitespace insensitive):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' signed-integer)?
    atom   := 'z' | complex-literal | func '(' expr ')' | '(' expr ')'
    func   := 'exp' | 'sin' | 'cos'

A complex literal is a decimal number with an optional 'i' suffix marking a
pure imaginary value; general complex constants are written as sums, e.g.
``1+2i``.  Integer exponents are restricted to magnitude <= 64 so trees stay
small and derivatives stay exact.

Evaluation is on the extended plane: division of a nonzero value by zero
yields the point at infinity (`INF`), and a genuine 0/0 raises
:class:`IndeterminateError` so the caller can perturb the sample point.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass

import numpy as np

MAX_EXPONENT = 64
_FUNCS = ("exp", "sin", "cos")


class ExprError(ValueError):
    """Base class for expression-language failures."""


class ParseError(ExprError):
    """Syntax error; `offset` is the 1-based byte offset into the source."""

    def __init__(self, message, position):
        self.offset = position + 1
        super().__init__(f"{message} (offset {self.offset})")


class IndeterminateError(ArithmeticError):
    """0/0 or another indeterminate form hit during evaluation."""


class _Infinity:
    """The point at infinity on the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"


INF = _Infinity()


def is_infinite(value):
    return value is INF


# ---------------------------------------------------------------------------
# Tree nodes


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class MapExpr:
    """A parsed holomorphic map, usable as ``m(z)``."""

    root: object
    source_text: str

    def __call__(self, z):
        return evaluate(self, z)

    def derivative(self):
        return differentiate(self)

    def to_source(self):
        return _print(self.root)

    def __str__(self):
        return self.source_text


# ---------------------------------------------------------------------------
# Tokenizer / parser

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Tokens:
    def __init__(self, source):
        self.source = source
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.source) and self.source[self.pos].isspace():
            self.pos += 1

    def peek(self):
        """Return (kind, value, offset) without consuming."""
        self._skip_ws()
        if self.pos >= len(self.source):
            return ("eof", None, self.pos)
        ch = self.source[self.pos]
        if ch in "+-*/^()":
            return ("op", ch, self.pos)
        m = _NUMBER_RE.match(self.source, self.pos)
        if m:
            end = m.end()
            imag = end < len(self.source) and self.source[end] == "i"
            text = m.group(0)
            value = complex(0.0, float(text)) if imag else complex(float(text), 0.0)
            return ("num", (value, end + (1 if imag else 0)), self.pos)
        m = _IDENT_RE.match(self.source, self.pos)
        if m:
            return ("ident", m.group(0), self.pos)
        raise ParseError(f"unexpected character {ch!r}", self.pos)

    def next(self):
        kind, value, offset = self.peek()
        if kind == "num":
            value, end = value
            self.pos = end
        elif kind == "op":
            self.pos = offset + 1
        elif kind == "ident":
            self.pos = offset + len(value)
        return kind, value, offset


def parse_map(source):
    """Parse a map definition into a :class:`MapExpr`.

    Raises :class:`ParseError` with a byte offset on bad syntax, exponent
    overflow, or an unknown function name.
    """
    if not source or not source.strip():
        raise ParseError("empty map source", 0)
    toks = _Tokens(source)
    root = _parse_expr(toks)
    kind, _, offset = toks.peek()
    if kind != "eof":
        raise ParseError("trailing input after expression", offset)
    return MapExpr(root=root, source_text=source.strip())


def _parse_expr(toks):
    node = _parse_term(toks)
    while True:
        kind, value, _ = toks.peek()
        if kind == "op" and value in "+-":
            toks.next()
            rhs = _parse_term(toks)
            node = Add(node, rhs) if value == "+" else Sub(node, rhs)
        else:
            return node


def _parse_term(toks):
    node = _parse_factor(toks)
    while True:
        kind, value, offset = toks.peek()
        if kind == "op" and value in "*/":
            toks.next()
            rhs = _parse_factor(toks)
            if value == "/":
                if rhs == Const(0j):
                    raise ParseError("division by the literal zero constant", offset)
                node = Div(node, rhs)
            else:
                node = Mul(node, rhs)
        else:
            return node


def _parse_factor(toks):
    node = _parse_atom(toks)
    kind, value, _ = toks.peek()
    if kind == "op" and value == "^":
        toks.next()
        node = Pow(node, _parse_signed_int(toks))
    return node


def _parse_signed_int(toks):
    kind, value, offset = toks.peek()
    sign = 1
    if kind == "op" and value in "+-":
        toks.next()
        sign = -1 if value == "-" else 1
        kind, value, offset = toks.peek()
    if kind != "num":
        raise ParseError("integer exponent expected", offset)
    toks.next()
    cval, _ = value if isinstance(value, tuple) else (value, None)
    if cval.imag != 0 or cval.real != int(cval.real):
        raise ParseError("integer exponent expected", offset)
    n = sign * int(cval.real)
    if abs(n) > MAX_EXPONENT:
        raise ParseError(f"exponent overflow (|n| > {MAX_EXPONENT})", offset)
    return n


def _parse_atom(toks):
    kind, value, offset = toks.next()
    if kind == "num":
        return Const(value)
    if kind == "ident":
        if value == "z":
            return Var()
        if value in _FUNCS:
            k, v, off = toks.next()
            if k != "op" or v != "(":
                raise ParseError(f"'(' expected after {value}", off)
            arg = _parse_expr(toks)
            k, v, off = toks.next()
            if k != "op" or v != ")":
                raise ParseError("unclosed parenthesis", off)
            return Call(value, arg)
        raise ParseError(f"unknown function name {value!r}", offset)
    if kind == "op" and value == "(":
        node = _parse_expr(toks)
        k, v, off = toks.next()
        if k != "op" or v != ")":
            raise ParseError("unclosed parenthesis", off)
        return node
    raise ParseError("atom expected ('z', literal, function or parenthesis)", offset)


# ---------------------------------------------------------------------------
# Printing (canonical form: explicit '*', parentheses by precedence)

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Pow: 3, Var: 9, Const: 9, Call: 9}


def _fmt_real(x):
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _print_const(value):
    re_, im = value.real, value.imag
    if im == 0:
        if re_ < 0:
            return f"(0 - {_fmt_real(-re_)})"
        return _fmt_real(re_)
    if re_ == 0:
        if im < 0:
            return f"(0 - {_fmt_real(-im)}i)"
        return f"{_fmt_real(im)}i"
    if re_ < 0:
        return f"(0 - {_print_const(-value)})"
    sign = "+" if im > 0 else "-"
    return f"({_fmt_real(re_)} {sign} {_fmt_real(abs(im))}i)"


def _print(node, parent_prec=0, right_side=False):
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Const):
        return _print_const(node.value)
    if isinstance(node, Pow):
        base = _print(node.base, parent_prec=4)
        text = f"{base}^{node.exponent}"
        prec = 3
    elif isinstance(node, Call):
        return f"{node.func}({_print(node.arg)})"
    else:
        ops = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}
        prec = _PREC[type(node)]
        left = _print(node.left, parent_prec=prec)
        right = _print(node.right, parent_prec=prec, right_side=True)
        text = f"{left}{ops[type(node)]}{right}"
    need = parent_prec > prec or (
        right_side and parent_prec == prec and isinstance(node, (Add, Sub, Mul, Div))
    )
    return f"({text})" if need else text


# ---------------------------------------------------------------------------
# Evaluation (scalar with the INF convention, vectorized without)


def evaluate(m, z):
    """Value of the map at z; poles give `INF`, 0/0 raises IndeterminateError."""
    root = m.root if isinstance(m, MapExpr) else m
    return _ev(root, complex(z))


def _finite_or_inf(value):
    if math.isfinite(value.real) and math.isfinite(value.imag):
        return value
    return INF


def _ev(node, z):
    if isinstance(node, Var):
        return z
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Add):
        a, b = _ev(node.left, z), _ev(node.right, z)
        if a is INF and b is INF:
            raise IndeterminateError("inf + inf")
        if a is INF or b is INF:
            return INF
        return _finite_or_inf(a + b)
    if isinstance(node, Sub):
        a, b = _ev(node.left, z), _ev(node.right, z)
        if a is INF and b is INF:
            raise IndeterminateError("inf - inf")
        if a is INF or b is INF:
            return INF
        return _finite_or_inf(a - b)
    if isinstance(node, Mul):
        a, b = _ev(node.left, z), _ev(node.right, z)
        if a is INF or b is INF:
            other = b if a is INF else a
            if other == 0:
                raise IndeterminateError("inf * 0")
            return INF
        return _finite_or_inf(a * b)
    if isinstance(node, Div):
        a, b = _ev(node.left, z), _ev(node.right, z)
        if b is INF:
            if a is INF:
                raise IndeterminateError("inf / inf")
            return 0j
        if a is INF:
            return INF
        if b == 0:
            if a == 0:
                raise IndeterminateError("0 / 0")
            return INF
        return _finite_or_inf(a / b)
    if isinstance(node, Pow):
        base = _ev(node.base, z)
        n = node.exponent
        if base is INF:
            if n > 0:
                return INF
            if n < 0:
                return 0j
            raise IndeterminateError("inf ^ 0")
        if base == 0 and n < 0:
            return INF
        if n == 0:
            return 1 + 0j
        try:
            return _finite_or_inf(base**n)
        except OverflowError:
            return INF
    if isinstance(node, Call):
        arg = _ev(node.arg, z)
        if arg is INF:
            raise IndeterminateError(f"{node.func} at the point at infinity")
        try:
            return _finite_or_inf(getattr(cmath, node.func)(arg))
        except OverflowError:
            return INF
    raise TypeError(f"unknown node {node!r}")


def evaluate_array(m, zs):
    """Vectorized evaluation on a numpy complex array.

    Plain IEEE semantics: poles come out as inf/nan entries, which callers
    mask and, where a value is actually needed, re-evaluate pointwise via
    :func:`evaluate`.
    """
    root = m.root if isinstance(m, MapExpr) else m
    zs = np.asarray(zs, dtype=np.complex128)
    with np.errstate(all="ignore"):
        return _ev_array(root, zs)


def _ev_array(node, zs):
    if isinstance(node, Var):
        return zs
    if isinstance(node, Const):
        return np.full(zs.shape, node.value, dtype=np.complex128)
    if isinstance(node, Add):
        return _ev_array(node.left, zs) + _ev_array(node.right, zs)
    if isinstance(node, Sub):
        return _ev_array(node.left, zs) - _ev_array(node.right, zs)
    if isinstance(node, Mul):
        return _ev_array(node.left, zs) * _ev_array(node.right, zs)
    if isinstance(node, Div):
        return _ev_array(node.left, zs) / _ev_array(node.right, zs)
    if isinstance(node, Pow):
        base = _ev_array(node.base, zs)
        return base ** node.exponent
    if isinstance(node, Call):
        return getattr(np, node.func)(_ev_array(node.arg, zs))
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Differentiation with constant folding


def differentiate(m):
    """Exact symbolic derivative as a new MapExpr."""
    root = m.root if isinstance(m, MapExpr) else m
    droot = _diff(root)
    return MapExpr(root=droot, source_text=_print(droot))


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


def _try_fold(node):
    """Evaluate an all-constant subtree; keep the tree on any failure."""
    try:
        value = _ev(node, 0j)
    except (IndeterminateError, TypeError):
        return node
    if value is INF:
        return node
    return Const(value)


def _fadd(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if _is_const(a) and _is_const(b):
        return _try_fold(Add(a, b))
    return Add(a, b)


def _fsub(a, b):
    if _is_const(b, 0):
        return a
    if _is_const(a) and _is_const(b):
        return _try_fold(Sub(a, b))
    return Sub(a, b)


def _fmul(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(0j)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a) and _is_const(b):
        return _try_fold(Mul(a, b))
    return Mul(a, b)


def _fdiv(a, b):
    if _is_const(a, 0) and not _is_const(b, 0):
        return Const(0j)
    if _is_const(b, 1):
        return a
    if _is_const(a) and _is_const(b) and b.value != 0:
        return _try_fold(Div(a, b))
    return Div(a, b)


def _fpow(base, n):
    if n == 0:
        return Const(1 + 0j)
    if n == 1:
        return base
    if _is_const(base):
        return _try_fold(Pow(base, n))
    return Pow(base, n)


def _fcall(func, arg):
    if _is_const(arg):
        return _try_fold(Call(func, arg))
    return Call(func, arg)


def as_fraction(m):
    """Rewrite the map as N/D with division-free numerator and denominator.

    For trees whose function arguments are themselves division-free, N and D
    are entire, which lets root counting work on pole-free functions.  A
    function of a genuine quotient (e.g. exp(1/z)) is kept opaque in the
    numerator; its essential singularity is outside the supported map class.
    """
    root = m.root if isinstance(m, MapExpr) else m
    n, d = _fraction(root)
    return (
        MapExpr(root=n, source_text=_print(n)),
        MapExpr(root=d, source_text=_print(d)),
    )


_ONE = Const(1 + 0j)


def _fraction(node):
    if isinstance(node, (Var, Const)):
        return node, _ONE
    if isinstance(node, Add):
        na, da = _fraction(node.left)
        nb, db = _fraction(node.right)
        return _fadd(_fmul(na, db), _fmul(nb, da)), _fmul(da, db)
    if isinstance(node, Sub):
        na, da = _fraction(node.left)
        nb, db = _fraction(node.right)
        return _fsub(_fmul(na, db), _fmul(nb, da)), _fmul(da, db)
    if isinstance(node, Mul):
        na, da = _fraction(node.left)
        nb, db = _fraction(node.right)
        return _fmul(na, nb), _fmul(da, db)
    if isinstance(node, Div):
        na, da = _fraction(node.left)
        nb, db = _fraction(node.right)
        return _fmul(na, db), _fmul(da, nb)
    if isinstance(node, Pow):
        nb, db = _fraction(node.base)
        n = node.exponent
        if n >= 0:
            return _fpow(nb, n), _fpow(db, n)
        return _fpow(db, -n), _fpow(nb, -n)
    if isinstance(node, Call):
        na, da = _fraction(node.arg)
        if _is_const(da, 1):
            return _fcall(node.func, na), _ONE
        return _fcall(node.func, _fdiv(na, da)), _ONE
    raise TypeError(f"unknown node {node!r}")


def _diff(node):
    if isinstance(node, Var):
        return Const(1 + 0j)
    if isinstance(node, Const):
        return Const(0j)
    if isinstance(node, Add):
        return _fadd(_diff(node.left), _diff(node.right))
    if isinstance(node, Sub):
        return _fsub(_diff(node.left), _diff(node.right))
    if isinstance(node, Mul):
        return _fadd(
            _fmul(_diff(node.left), node.right),
            _fmul(node.left, _diff(node.right)),
        )
    if isinstance(node, Div):
        num = _fsub(
            _fmul(_diff(node.left), node.right),
            _fmul(node.left, _diff(node.right)),
        )
        return _fdiv(num, _fpow(node.right, 2))
    if isinstance(node, Pow):
        n = node.exponent
        if n == 0:
            return Const(0j)
        inner = _fmul(Const(complex(n)), _fpow(node.base, n - 1))
        return _fmul(inner, _diff(node.base))
    if isinstance(node, Call):
        du = _diff(node.arg)
        if node.func == "exp":
            outer = Call("exp", node.arg)
        elif node.func == "sin":
            outer = Call("cos", node.arg)
        else:  # cos
            outer = _fmul(Const(-1 + 0j), Call("sin", node.arg))
        return _fmul(outer, du)
    raise TypeError(f"unknown node {node!r}")
