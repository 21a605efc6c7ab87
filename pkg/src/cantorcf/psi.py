"""The gap function Psi and exact comparison of huge and tiny quantities.

Three layers live here:

* :class:`ExpForm`, an exact number ``mantissa * b**texp`` whose exponent may
  be far too large to materialize ``b**texp``;
* :class:`LogBound`, a rational bracket of a base-b logarithm, refinable to any
  width, used for quantities such as ``q**(-q)`` that are not of the form
  ``r * b**t``;
* the small expression language for Psi together with an exact evaluator.

Psi grammar (whitespace is insignificant)::

    expr := term ('*' term)*
    term := atom ['^' int]
    atom := RATIONAL | 'q' | 'min(' expr ',' expr ')' | 'expb(-' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

from .errors import PsiRangeError, PsiSyntaxError

# Largest power of b we agree to build when aligning two exponents.
MAX_SHIFT = 1 << 22
DEFAULT_LOG_PRECISION = 64
MAX_LOG_PRECISION = 4096
_INT64_MAX = (1 << 63) - 1


class Order(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1
    INDISTINGUISHABLE = 2


def _order(c: int) -> Order:
    return Order.LESS if c < 0 else Order.GREATER if c > 0 else Order.EQUAL


def short_int(n: int) -> str:
    """Abbreviate big integers for witnesses and logs."""
    if n.bit_length() < 200:
        return str(n)
    digits = max(1, int(n.bit_length() * 0.30102999566398))
    return f"{'-' if n < 0 else ''}<~{digits}-digit integer, {n.bit_length()} bits>"


class ExpForm:
    """Exact non-zero number ``num/den * b**texp`` kept with 1 <= |num/den| < b."""

    __slots__ = ("num", "den", "texp", "b")

    def __init__(self, mantissa, texp: int, b: int):
        m = Fraction(mantissa)
        self._set(m.numerator, m.denominator, texp, b)

    @classmethod
    def from_parts(cls, num: int, den: int, texp: int, b: int) -> ExpForm:
        obj = cls.__new__(cls)
        obj._set(num, den, texp, b)
        return obj

    @classmethod
    def one(cls, b: int) -> ExpForm:
        return cls.from_parts(1, 1, 0, b)

    @classmethod
    def power_of_base(cls, texp: int, b: int) -> ExpForm:
        return cls.from_parts(1, 1, texp, b)

    def _set(self, num: int, den: int, texp: int, b: int) -> None:
        if num == 0:
            raise ValueError("ExpForm cannot represent zero")
        if den < 0:
            num, den = -num, -den
        sign = -1 if num < 0 else 1
        n = abs(num)
        k = math.floor((n.bit_length() - den.bit_length()) / math.log2(b))
        if k > 0:
            den *= b**k
        elif k < 0:
            n *= b ** (-k)
        while n < den:
            n *= b
            k -= 1
        while n >= b * den:
            den *= b
            k += 1
        if n.bit_length() < 4096 or den.bit_length() < 4096:
            g = math.gcd(n, den)
            if g > 1:
                n //= g
                den //= g
        self.num, self.den, self.texp, self.b = sign * n, den, texp + k, b

    @property
    def mantissa(self) -> Fraction:
        return Fraction(self.num, self.den)

    @property
    def sign(self) -> int:
        return -1 if self.num < 0 else 1

    def _check(self, other: ExpForm) -> None:
        if self.b != other.b:
            raise ValueError(f"cannot mix bases {self.b} and {other.b}")

    def _coerce(self, other) -> ExpForm:
        if isinstance(other, ExpForm):
            self._check(other)
            return other
        return ExpForm(other, 0, self.b)

    def __mul__(self, other) -> ExpForm:
        o = self._coerce(other)
        return ExpForm.from_parts(self.num * o.num, self.den * o.den, self.texp + o.texp, self.b)

    __rmul__ = __mul__

    def __truediv__(self, other) -> ExpForm:
        o = self._coerce(other)
        return ExpForm.from_parts(self.num * o.den, self.den * o.num, self.texp - o.texp, self.b)

    def reciprocal(self) -> ExpForm:
        return ExpForm.from_parts(self.den * self.sign, abs(self.num), -self.texp, self.b)

    def __pow__(self, k: int) -> ExpForm:
        if k < 0:
            return self.reciprocal() ** (-k)
        return ExpForm.from_parts(self.num**k, self.den**k, self.texp * k, self.b)

    def __neg__(self) -> ExpForm:
        return ExpForm.from_parts(-self.num, self.den, self.texp, self.b)

    def __abs__(self) -> ExpForm:
        return self if self.num > 0 else -self

    def scale(self, t: int) -> ExpForm:
        """Multiply by b**t without touching the mantissa."""
        return ExpForm.from_parts(self.num, self.den, self.texp + t, self.b)

    def _aligned(self, other: ExpForm) -> tuple[int, int, int, int]:
        t = min(self.texp, other.texp)
        sx, so = self.texp - t, other.texp - t
        if max(sx, so) > MAX_SHIFT:
            raise OverflowError("exponents too far apart to add exactly")
        return self.num * other.den * self.b**sx, other.num * self.den * self.b**so, self.den * other.den, t

    def __add__(self, other) -> ExpForm:
        o = self._coerce(other)
        a, c, d, t = self._aligned(o)
        return ExpForm.from_parts(a + c, d, t, self.b)

    def __sub__(self, other) -> ExpForm:
        o = self._coerce(other)
        a, c, d, t = self._aligned(o)
        return ExpForm.from_parts(a - c, d, t, self.b)

    def to_fraction(self, max_shift: int = MAX_SHIFT) -> Fraction:
        if abs(self.texp) > max_shift:
            raise OverflowError(f"b^{short_int(self.texp)} is too large to materialize")
        if self.texp >= 0:
            return Fraction(self.num * self.b**self.texp, self.den)
        return Fraction(self.num, self.den * self.b ** (-self.texp))

    def compare(self, other) -> int:
        o = self._coerce(other)
        if self.sign != o.sign:
            return self.sign
        if self.texp != o.texp:
            c = 1 if self.texp > o.texp else -1
        else:
            lhs, rhs = self.num * o.den, o.num * self.den
            c = (lhs > rhs) - (lhs < rhs)
            return c
        return c * self.sign

    def __eq__(self, other):
        if not isinstance(other, (ExpForm, int, Fraction)):
            return NotImplemented
        return self.compare(other) == 0

    def __hash__(self):
        return hash((self.mantissa, self.texp, self.b))

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __repr__(self):
        if self.num.bit_length() < 200 and self.den.bit_length() < 200:
            m = str(self.mantissa)
        else:
            m = f"~{float(self.mantissa):.12g}"
        return f"{m}*{self.b}^{short_int(self.texp)}"


def compare_expforms(x: ExpForm, y: ExpForm) -> Order:
    return _order(x.compare(y))


def exceeds_sum(p: ExpForm, r: ExpForm, s: ExpForm) -> bool:
    """Exact test of p > r + s for positive ExpForms, without materializing powers."""
    big, small = (r, s) if r >= s else (s, r)
    if p <= big:
        return False
    # canonical mantissas lie in [1, b): two exponent steps above big means p > b*big >= big + small
    if p.texp >= big.texp + 2:
        return True
    return (p - big) > small


def ratio_below(u: int, shift: int, n: int, bound: ExpForm) -> bool:
    """Exact test of u / (b**shift * (b**n - 1)) < bound, for n >= 1."""
    b = bound.b
    if bound.sign < 0:
        return False
    top = bound.scale(shift + n)
    return exceeds_sum(top, bound.scale(shift), ExpForm(u, 0, b))


# ---------------------------------------------------------------------------
# Logarithm brackets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Power:
    """The positive number ``base ** exp`` for an integer base and rational exponent."""

    base: int
    exp: Fraction

    def __post_init__(self):
        if self.base < 1:
            raise ValueError("Power needs a positive base")
        object.__setattr__(self, "exp", Fraction(self.exp))


@dataclass(frozen=True)
class Product:
    factors: tuple

    def __init__(self, *factors):
        object.__setattr__(self, "factors", tuple(factors))


Descriptor = Union[ExpForm, Power, Product, Fraction, int]


@lru_cache(maxsize=1024)
def _log_unit(num: int, den: int, b: int, k: int) -> tuple[Fraction, Fraction]:
    """Bracket of log_b(num/den) for 1 <= num/den < b, width 2**-k (or a point)."""
    if num == den:
        return Fraction(0), Fraction(0)
    guard = 32
    while True:
        prec = k + guard
        one = 1 << prec
        target = b << prec
        lo = (num << prec) // den
        hi = -((-num << prec) // den)
        bits = 0
        for j in range(1, k + 1):
            lo = (lo * lo) >> prec
            hi = -((-hi * hi) >> prec)
            bits <<= 1
            if lo >= target:
                bits |= 1
                lo //= b
                hi = -(-hi // b)
            elif hi >= target:
                break
            if lo == hi == one:
                # exact: log is bits / 2**j on the nose
                return Fraction(bits, 1 << j), Fraction(bits, 1 << j)
        else:
            return Fraction(bits, 1 << k), Fraction(bits + 1, 1 << k)
        guard *= 2
        if guard > 4 * (k + 64):
            # y sits within rounding noise of b; return the bits that are certain
            bits >>= 1
            j -= 1
            return Fraction(bits, 1 << j), Fraction(bits + 1, 1 << j)


def _as_expform(x, b: int) -> ExpForm:
    if isinstance(x, ExpForm):
        if x.b != b:
            raise ValueError("base mismatch")
        return x
    return ExpForm(x, 0, b)


@dataclass(frozen=True)
class LogBound:
    """lo <= log_b(source) <= hi."""

    lo: Fraction
    hi: Fraction
    source: object = None
    b: int = 0
    precision: int = DEFAULT_LOG_PRECISION

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def refine(self, k: int) -> LogBound:
        return logbound_of(self.source, self.b, k)

    def __add__(self, other: LogBound) -> LogBound:
        return LogBound(self.lo + other.lo, self.hi + other.hi, None, self.b, min(self.precision, other.precision))


def logbound_of(x: Descriptor, b: int, precision: int = DEFAULT_LOG_PRECISION) -> LogBound:
    if isinstance(x, Product):
        extra = max(1, len(x.factors)).bit_length()
        lo = hi = Fraction(0)
        for f in x.factors:
            lb = logbound_of(f, b, precision + extra)
            lo += lb.lo
            hi += lb.hi
        return LogBound(lo, hi, x, b, precision)
    if isinstance(x, Power):
        if x.exp == 0 or x.base == 1:
            return LogBound(Fraction(0), Fraction(0), x, b, precision)
        e = x.exp
        extra = max(0, abs(e.numerator).bit_length() - e.denominator.bit_length() + 1)
        inner = logbound_of(x.base, b, precision + extra)
        a, c = e * inner.lo, e * inner.hi
        return LogBound(min(a, c), max(a, c), x, b, precision)
    ef = _as_expform(x, b)
    if ef.sign < 0:
        raise ValueError("logarithm of a negative quantity")
    lo, hi = _log_unit(ef.num, ef.den, b, max(precision, 8))
    return LogBound(ef.texp + lo, ef.texp + hi, x, b, precision)


def _exponent_scale(x) -> int:
    """Bits by which Power exponents magnify the width of an inner bracket."""
    if isinstance(x, Product):
        return max((_exponent_scale(f) for f in x.factors), default=0)
    if isinstance(x, Power):
        return max(0, abs(x.exp.numerator).bit_length() - x.exp.denominator.bit_length() + 1)
    return 0


def compare_via_logs(
    x: Descriptor,
    y: Descriptor,
    b: int,
    max_precision: int = MAX_LOG_PRECISION,
    start_precision: int = DEFAULT_LOG_PRECISION,
) -> Order:
    """Order of two positive quantities; INDISTINGUISHABLE rather than a guess."""
    exact = (ExpForm, Fraction, int)
    if isinstance(x, exact) and isinstance(y, exact):
        return compare_expforms(_as_expform(x, b), _as_expform(y, b))
    # a cheap coarse pass first: huge exponents make fine brackets expensive
    scale = max(_exponent_scale(x), _exponent_scale(y))
    schedule = [16 - scale] if scale else []
    k = start_precision
    while k < max_precision:
        schedule.append(k)
        k *= 2
    schedule.append(max_precision)
    for k in schedule:
        lx, ly = logbound_of(x, b, k), logbound_of(y, b, k)
        if lx.hi < ly.lo:
            return Order.LESS
        if lx.lo > ly.hi:
            return Order.GREATER
        if lx.lo == lx.hi == ly.lo == ly.hi:
            return Order.EQUAL
    return Order.INDISTINGUISHABLE


# ---------------------------------------------------------------------------
# Psi expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Var:
    def __str__(self):
        return "q"


@dataclass(frozen=True)
class Mul:
    factors: tuple

    def __str__(self):
        return " * ".join(_wrap(f) for f in self.factors)


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int

    def __str__(self):
        return f"{_wrap(self.base)}^{self.exp}"


@dataclass(frozen=True)
class Min:
    left: object
    right: object

    def __str__(self):
        return f"min({self.left}, {self.right})"


@dataclass(frozen=True)
class ExpB:
    arg: object

    def __str__(self):
        return f"expb(-{self.arg})"


PsiExpr = Union[Const, Var, Mul, Pow, Min, ExpB]


def _wrap(node) -> str:
    if isinstance(node, (Mul, Pow)) or (isinstance(node, Const) and node.value.denominator != 1):
        return f"({node})"
    return str(node)


_TOKEN = re.compile(r"\s*(?:(\d+)|(min|expb|q)|(.))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m.group(1):
                self.tokens.append(("int", m.group(1), m.start(1)))
            elif m.group(2):
                self.tokens.append(("name", m.group(2), m.start(2)))
            elif m.group(3):
                if m.group(3) not in "*^/(),-":
                    raise PsiSyntaxError(f"unexpected character {m.group(3)!r}", m.start(3))
                self.tokens.append(("op", m.group(3), m.start(3)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "", len(self.text))

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value is not None else kind
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise PsiSyntaxError(f"expected {want}, found {got}", tok[2])
        self.i += 1
        return tok

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok[0] == kind and (value is None or tok[1] == value)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            tok = self.peek()
            raise PsiSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        factors = [self.term()]
        while self.at("op", "*"):
            self.i += 1
            factors.append(self.term())
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def term(self):
        base = self.atom()
        if self.at("op", "^"):
            self.i += 1
            neg = self.at("op", "-")
            if neg:
                self.i += 1
            tok = self.take("int")
            e = int(tok[1])
            if e > _INT64_MAX:
                raise PsiSyntaxError("exponent out of range", tok[2])
            return Pow(base, -e if neg else e)
        return base

    def atom(self):
        tok = self.peek()
        if tok[0] == "int":
            self.i += 1
            value = Fraction(int(tok[1]))
            if self.at("op", "/"):
                self.i += 1
                den = self.take("int")
                if int(den[1]) == 0:
                    raise PsiSyntaxError("zero denominator", den[2])
                value /= int(den[1])
            return Const(value)
        if tok[0] == "name":
            self.i += 1
            if tok[1] == "q":
                return Var()
            self.take("op", "(")
            if tok[1] == "min":
                left = self.expr()
                self.take("op", ",")
                right = self.expr()
                self.take("op", ")")
                return Min(left, right)
            self.take("op", "-")
            arg = self.expr()
            self.take("op", ")")
            return ExpB(arg)
        if tok[0] == "op" and tok[1] == "(":
            self.i += 1
            node = self.expr()
            self.take("op", ")")
            return node
        what = "end of input" if tok[0] == "end" else repr(tok[1])
        raise PsiSyntaxError(f"unexpected {what}", tok[2])


def parse_psi(text: str) -> PsiExpr:
    return _Parser(text).parse()


def _eval(node, q: int, b: int):
    # returns an ExpForm, or None for an exact zero
    if isinstance(node, Const):
        return ExpForm(node.value, 0, b) if node.value else None
    if isinstance(node, Var):
        return ExpForm(q, 0, b)
    if isinstance(node, Mul):
        acc = ExpForm.one(b)
        for f in node.factors:
            v = _eval(f, q, b)
            if v is None:
                return None
            acc = acc * v
        return acc
    if isinstance(node, Pow):
        v = _eval(node.base, q, b)
        if v is None:
            if node.exp < 0:
                raise PsiRangeError("zero raised to a negative power")
            return None if node.exp else ExpForm.one(b)
        return v**node.exp
    if isinstance(node, Min):
        left, right = _eval(node.left, q, b), _eval(node.right, q, b)
        if left is None or right is None:
            return None
        return left if left <= right else right
    if isinstance(node, ExpB):
        v = _eval(node.arg, q, b)
        if v is None:
            return ExpForm.one(b)
        try:
            e = v.to_fraction()
        except OverflowError:
            raise PsiRangeError("expb exponent is too large to represent") from None
        if e.denominator != 1:
            raise PsiRangeError(f"expb exponent {e} is not an integer")
        return ExpForm.power_of_base(-e.numerator, b)
    raise TypeError(f"not a Psi node: {node!r}")


def eval_psi(expr: PsiExpr, q: int, b: int) -> ExpForm:
    """Exact value of Psi(q) as an ExpForm in base b; must lie in (0, 1]."""
    if q < 1:
        raise ValueError("Psi is defined on positive integers")
    v = _eval(expr, q, b)
    if v is None or v.sign < 0 or v > ExpForm.one(b):
        raise PsiRangeError(f"Psi is not a valid gap function at q={short_int(q)}: value {v!r}")
    return v
