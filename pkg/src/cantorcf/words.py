"""Digit words over a two-letter alphabet and exact periodic base-b expansions.

Words built by the construction are astronomically long, so they are kept in
a compressed recursive form.  A :class:`Composite` word ``(base, power, flip)``
stands for ``base`` repeated ``power`` times followed by ``base`` once more,
with the final digit swapped for the other digit of the pair when ``flip`` is
set.  Values and lengths are computed from the structure, never from the
expanded digits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Union

import gmpy2

from .errors import BudgetExceeded

DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_BASE = len(DIGIT_CHARS)
DEFAULT_DIGIT_BUDGET = 10**6


def digit_char(d: int) -> str:
    return DIGIT_CHARS[d]


def digits_to_int(text: str, b: int) -> int:
    """Positional value of a digit string; no interpreter digit-count limit."""
    if not text:
        return 0
    try:
        return int(gmpy2.mpz(text, b))
    except ValueError:
        raise ValueError(f"{text[:20]!r} is not a base-{b} digit string") from None


def int_to_digits(n: int, b: int, width: int = 0) -> str:
    """Base-b digit string of ``n >= 0``, left padded with zeros to ``width``."""
    if width == 0 and n == 0:
        return ""
    return gmpy2.digits(n, b).zfill(width)


@dataclass(frozen=True)
class DigitPair:
    """The base, the full digit set D and the two digits the construction uses."""

    b: int
    d1: int
    d2: int
    full: frozenset = field(default=frozenset())

    def __post_init__(self):
        full = frozenset(self.full) if self.full else frozenset((self.d1, self.d2))
        object.__setattr__(self, "full", full)
        if not 3 <= self.b <= MAX_BASE:
            raise ValueError(f"base must lie in [3, {MAX_BASE}], got {self.b}")
        if not 0 <= self.d1 < self.d2 <= self.b - 1:
            raise ValueError(f"need 0 <= d1 < d2 <= b-1, got ({self.d1}, {self.d2})")
        if any(not 0 <= d < self.b for d in full):
            raise ValueError("digit set contains a value outside [0, b-1]")
        if len(full) < 2 or len(full) >= self.b:
            raise ValueError("D must be a proper subset of the digits with at least two elements")
        if not {self.d1, self.d2} <= full:
            raise ValueError("the digit pair must be drawn from D")

    @classmethod
    def from_digits(cls, b: int, digits: Iterable[int], pair: tuple[int, int] | None = None):
        full = frozenset(digits)
        if pair is None:
            pair = (0, 1) if {0, 1} <= full else tuple(sorted(full)[:2])
        d1, d2 = sorted(pair)
        return cls(b, d1, d2, full)

    @property
    def u(self) -> int:
        return self.d2 - self.d1

    def other(self, d: int) -> int:
        if d == self.d1:
            return self.d2
        if d == self.d2:
            return self.d1
        raise ValueError(f"digit {d} is not in the pair ({self.d1}, {self.d2})")


class DigitWord:
    """Common base of :class:`Literal` and :class:`Composite`."""

    length: int
    last_digit: int

    def __len__(self):
        # len() is capped at sys.maxsize, so prefer .length for big words
        return self.length


@dataclass(frozen=True)
class Literal(DigitWord):
    text: str

    def __post_init__(self):
        object.__setattr__(self, "length", len(self.text))
        object.__setattr__(self, "last_digit", int(self.text[-1], 36) if self.text else -1)

    @classmethod
    def of(cls, digits: Iterable[int]) -> Literal:
        return cls("".join(DIGIT_CHARS[d] for d in digits))

    def digits(self) -> list[int]:
        return [int(c, 36) for c in self.text]


@dataclass(frozen=True)
class Composite(DigitWord):
    base: DigitWord
    power: int
    flip: bool
    alphabet: tuple[int, int]

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be positive")
        if self.base.length == 0:
            raise ValueError("cannot repeat the empty word")
        object.__setattr__(self, "length", (self.power + 1) * self.base.length)
        last = self.base.last_digit
        if self.flip:
            last = _swap(last, self.alphabet)
        object.__setattr__(self, "last_digit", last)


Word = Union[Literal, Composite]


def _swap(d: int, alphabet: tuple[int, int]) -> int:
    a, c = alphabet
    if d == a:
        return c
    if d == c:
        return a
    raise ValueError(f"digit {d} is not in the alphabet {alphabet}")


def compose(base: DigitWord, power: int, pair: DigitPair) -> Composite:
    """The word ``base^power base'``."""
    return Composite(base, power, True, (pair.d1, pair.d2))


def flip_last(w: DigitWord, pair: DigitPair) -> DigitWord:
    if w.length == 0:
        raise ValueError("cannot flip the last digit of the empty word")
    if isinstance(w, Literal):
        return Literal(w.text[:-1] + DIGIT_CHARS[pair.other(w.last_digit)])
    # base^p base' <-> base^(p+1): toggling the flag swaps the final digit
    return Composite(w.base, w.power, not w.flip, w.alphabet)


@lru_cache(maxsize=256)
def word_value(w: DigitWord, b: int) -> int:
    """Integer with base-b digits w, most significant first."""
    if isinstance(w, Literal):
        return digits_to_int(w.text, b)
    v = word_value(w.base, b)
    block = b**w.base.length
    repeated = v * (block**w.power - 1) // (block - 1)
    tail = v + w.last_digit - w.base.last_digit
    return repeated * block + tail


def iter_digits(w: DigitWord) -> Iterator[int]:
    if isinstance(w, Literal):
        for c in w.text:
            yield int(c, 36)
        return
    for _ in range(w.power):
        yield from iter_digits(w.base)
    yield from itertools.islice(iter_digits(w.base), w.base.length - 1)
    yield w.last_digit


def expand_digits(w: DigitWord, limit: int) -> str:
    """First ``min(limit, |w|)`` digits of w as a digit string."""
    if limit < 0:
        raise ValueError("limit must be non-negative")
    return "".join(DIGIT_CHARS[d] for d in itertools.islice(iter_digits(w), limit))


def word_to_record(w: DigitWord):
    if isinstance(w, Literal):
        return w.text
    return {"base": word_to_record(w.base), "power": str(w.power), "flip": w.flip}


def word_from_record(rec, pair: DigitPair) -> DigitWord:
    if isinstance(rec, str):
        return Literal(rec)
    return Composite(
        word_from_record(rec["base"], pair), int(rec["power"]), bool(rec["flip"]), (pair.d1, pair.d2)
    )


def periodic_parts(v: DigitWord, w: DigitWord, b: int) -> tuple[int, int]:
    """Unreduced numerator and denominator of (0.v w w w ...)_b."""
    if w.length == 0:
        raise ValueError("period must be non-empty")
    vv = word_value(v, b)
    cycle = b**w.length - 1
    return vv * cycle + word_value(w, b), b**v.length * cycle


def periodic_to_rational(v: DigitWord, w: DigitWord, b: int) -> Fraction:
    return Fraction(*periodic_parts(v, w, b))


@dataclass(frozen=True)
class PeriodicExpansion:
    b: int
    preperiod: str
    period: str

    def words(self) -> tuple[Literal, Literal]:
        return Literal(self.preperiod), Literal(self.period)

    def __str__(self):
        return f"0.{self.preperiod}({self.period})"


@lru_cache(maxsize=8192)
def _expansion_shape(q: int, b: int, budget: int) -> tuple[int, int]:
    """(preperiod length, period length) of any reduced fraction with denominator q."""
    m, rest = 0, q
    g = gmpy2.gcd(rest, b)
    while g > 1:
        rest //= int(g)
        m += 1
        g = gmpy2.gcd(rest, b)
    if m > budget:
        raise BudgetExceeded(f"preperiod of 1/{q} exceeds {budget} digits")
    n, r = 1, b % rest
    one = 1 % rest
    while r != one:
        n += 1
        if m + n > budget:
            raise BudgetExceeded(f"expansion of 1/{q} in base {b} exceeds {budget} digits")
        r = r * b % rest
    return m, n


def rational_to_expansion(x: Fraction, b: int, budget: int = DEFAULT_DIGIT_BUDGET) -> PeriodicExpansion:
    """Canonical (shortest preperiod, shortest period) expansion of x in [0, 1].

    Terminating expansions come back with period "0"; x = 1 is 0.(b-1)(b-1)...
    """
    if not isinstance(x, Fraction):
        x = Fraction(x)
    p, q = x.numerator, x.denominator
    if not 0 <= p <= q:
        raise ValueError("x must lie in [0, 1]")
    if p == q:
        return PeriodicExpansion(b, "", DIGIT_CHARS[b - 1])
    m, n = _expansion_shape(q, b, budget)
    shifted = p * b**m
    head, rem = divmod(shifted, q)
    period = rem * (b**n - 1) // q
    return PeriodicExpansion(b, int_to_digits(head, b, m), int_to_digits(period, b, n))


def in_cantor(x: Fraction, pair: DigitPair, budget: int = DEFAULT_DIGIT_BUDGET) -> bool:
    """True iff some base-b expansion of x uses only digits of D."""
    exp = rational_to_expansion(x, pair.b, budget)
    allowed = {DIGIT_CHARS[d] for d in pair.full}
    candidates = [exp.preperiod + exp.period]
    if exp.period == "0" and exp.preperiod:
        # b-adic rational: 0.a1...ak 000... == 0.a1...(ak - 1) (b-1)(b-1)...
        last = int(exp.preperiod[-1], 36) - 1
        candidates.append(exp.preperiod[:-1] + DIGIT_CHARS[last] + DIGIT_CHARS[pair.b - 1])
    return any(set(c) <= allowed for c in candidates)
