"""Stand-alone certificate verification.

Every check is a pure function of the certificate and returns one
:class:`CheckReport`.  Nothing is taken on trust from the construction: the
identities are re-evaluated with exact integers, convergents come from a plain
Euclidean algorithm, and digits come from long division.

|xi - p_i/q_i| is never computed.  The tail xi - p_i/q_i is the alternating sum
of the differences Delta_j = p_{j+1}/q_{j+1} - p_j/q_j for j >= i, whose sizes
u / (b^m1 (b^N_{j+1} - 1)) strictly decrease, so it lies strictly between
|Delta_i| - |Delta_{i+1}| and |Delta_i|.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable

import gmpy2

from .build import (
    COMPLETE,
    EXHAUSTED,
    STRICT,
    Certificate,
    bits_upper,
    loads,
)
from .errors import CantorError, CertificateError
from .numth import choose_m1, split_u
from .psi import (
    ExpForm,
    Order,
    Power,
    Product,
    compare_via_logs,
    eval_psi,
    ratio_below,
    short_int,
)
from .words import (
    DIGIT_CHARS,
    Composite,
    DigitWord,
    Literal,
    int_to_digits,
    iter_digits,
    periodic_parts,
)

log = logging.getLogger(__name__)

DEFAULT_DIGIT_BUDGET = 10**5
# |Delta| is evaluated exactly when b^N stays below this many bits
EXACT_DELTA_BITS = 1 << 16


class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"
    INDISTINGUISHABLE = "indistinguishable"


@dataclass
class CheckReport:
    check: str
    scope: int | None
    verdict: Verdict
    witness: str
    mandatory: bool = True

    @property
    def scope_label(self) -> str:
        return "global" if self.scope is None else str(self.scope)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "scope": self.scope_label,
            "verdict": self.verdict.value,
            "witness": self.witness,
            "mandatory": self.mandatory,
        }


@dataclass(frozen=True)
class VerifyOptions:
    digit_budget: int = DEFAULT_DIGIT_BUDGET
    max_precision: int = 4096
    checks: frozenset | None = None

    def wants(self, name: str) -> bool:
        return self.checks is None or name in self.checks

    def to_record(self) -> dict:
        return {"digit_budget": self.digit_budget, "max_precision": self.max_precision}


def _ok(cond: bool) -> Verdict:
    return Verdict.PASS if cond else Verdict.FAIL


def _order_verdict(order: Order, good: tuple) -> Verdict:
    if order is Order.INDISTINGUISHABLE:
        return Verdict.INDISTINGUISHABLE
    return _ok(order in good)


# ---------------------------------------------------------------------------
# Continued fractions
# ---------------------------------------------------------------------------


def continued_fraction(p: int, q: int) -> list[int]:
    """Canonical partial quotients of p/q (last one >= 2 unless p/q is an integer)."""
    if q < 1:
        raise ValueError("denominator must be positive")
    quotients = []
    while q:
        a, r = divmod(p, q)
        quotients.append(a)
        p, q = q, r
    return quotients


def convergents_of(quotients: Iterable[int]) -> list[tuple[int, int]]:
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in quotients:
        p0, q0, p1, q1 = a * p0 + p1, a * q0 + q1, p0, q0
        out.append((p0, q0))
    return out


def euclid_convergents(p: int, q: int) -> list[tuple[int, int]]:
    """Convergents (as reduced (p, q) pairs) of the canonical expansion of p/q."""
    if not 0 <= p < q or gmpy2.gcd(p, q) != 1:
        raise ValueError("need 0 <= p < q with gcd(p, q) = 1")
    return convergents_of(continued_fraction(p, q))


def _alternate_quotients(quotients: list[int]) -> list[int] | None:
    # [a0; ..., an] == [a0; ..., an - 1, 1]
    if len(quotients) < 2:
        return None
    return quotients[:-1] + [quotients[-1] - 1, 1]


def format_quotients(quotients: list[int], limit: int = 12) -> str:
    shown = [short_int(a) for a in quotients[:limit]]
    if len(quotients) > limit:
        shown.append(f"... ({len(quotients)} terms)")
    head, rest = shown[0], shown[1:]
    return f"[{head}; {', '.join(rest)}]" if rest else f"[{head}]"


# ---------------------------------------------------------------------------
# Helpers on certificate quantities
# ---------------------------------------------------------------------------


def _q_prev(cert: Certificate, i: int) -> int:
    return cert.q0 if i == 1 else cert.steps[i - 2].q


def _n_at(cert: Certificate, i: int) -> tuple[int, bool] | None:
    """(N_i, exact) where a non-exact value is a certified lower bound."""
    k = cert.depth
    if 1 <= i <= k:
        return cert.steps[i - 1].N, True
    if i == k + 1:
        if cert.lookahead is not None:
            return cert.lookahead[1], True
        # any continuation has m_{k+1} >= 1
        return 2 * cert.steps[-1].N, False
    if i == k + 2 and cert.lookahead is not None:
        return 2 * cert.lookahead[1], False
    return None


def delta_bracket(cert: Certificate, j: int) -> tuple[ExpForm | None, ExpForm | None]:
    """lo <= |Delta_j| <= hi, Delta_j = p_{j+1}/q_{j+1} - p_j/q_j; lo is None if unknown."""
    at = _n_at(cert, j + 1)
    if at is None:
        return None, None
    n, exact = at
    b, u, m1 = cert.b, cert.u, cert.m1
    hi = ExpForm(Fraction(u * b, b - 1), -m1 - n, b)
    if not exact:
        return None, hi
    if n * b.bit_length() <= EXACT_DELTA_BITS:
        val = ExpForm(Fraction(u, b**m1 * (b**n - 1)), 0, b)
        return val, val
    return ExpForm(u, -m1 - n, b), hi


def sandwich_low(lo_i: ExpForm, hi_next: ExpForm) -> ExpForm | None:
    """A positive lower bound on |Delta_i| - |Delta_{i+1}|, or None."""
    b = lo_i.b
    if hi_next.scale(1) <= lo_i:
        return lo_i * Fraction(b - 1, b)
    diff = lo_i - hi_next
    return diff if diff.sign > 0 else None


def _cmp_int_pow(q: int, b: int, e: int) -> int:
    """Sign of q - b**e for q >= 1, deciding by bit lengths when possible."""
    bits = q.bit_length()
    if bits < e * (b.bit_length() - 1) + 1:
        return -1
    if bits > e * b.bit_length():
        return 1
    t = b**e
    return (q > t) - (q < t)


def _word_digits(w: DigitWord) -> set[int]:
    if isinstance(w, Literal):
        return {int(c, 36) for c in set(w.text)}
    return _word_digits(w.base) | {w.last_digit}


def _fmt_set(ds) -> str:
    return "{" + ",".join(str(d) for d in sorted(ds)) + "}"


class _PsiCache:
    def __init__(self, cert: Certificate):
        self.cert = cert
        self.values: dict[int, ExpForm] = {}

    def __call__(self, q: int) -> ExpForm:
        if q not in self.values:
            self.values[q] = eval_psi(self.cert.params.psi, q, self.cert.b)
        return self.values[q]


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def check_initial(cert: Certificate) -> CheckReport:
    pair, b = cert.pair, cert.b
    problems = []
    s = split_u(pair.u, b)
    if (cert.u, cert.u1, cert.u2) != (s.u, s.u1, s.u2):
        problems.append(f"u split is {s.u}={s.u1}*{s.u2}, certificate says {cert.u}={cert.u1}*{cert.u2}")
    try:
        m1, n = choose_m1(pair)
    except CantorError as exc:
        return CheckReport("initial", None, Verdict.FAIL, f"recomputing m1 failed: {exc}")
    if (cert.m1, cert.N) != (m1, n):
        problems.append(f"m1, N should be {m1}, {n}; certificate has {short_int(cert.m1)}, {short_int(cert.N)}")
    first = cert.steps[0]
    q1 = first.q
    bm1 = b**cert.m1 if cert.m1 < 1 << 20 else None
    if bm1 is None:
        return CheckReport("initial", None, Verdict.FAIL, f"m1 = {short_int(cert.m1)} is implausibly large")
    if bm1 % s.u1:
        problems.append(f"u1={s.u1} does not divide {b}^{cert.m1}")
    rhs = b ** (cert.m1 + 1) - 1
    if s.u2 * q1 != rhs:
        problems.append(f"u2*q1 = {s.u2}*{short_int(q1)} != {b}^{cert.m1 + 1}-1")
    if cert.q0 * s.u1 != bm1:
        problems.append(f"q0 = {short_int(cert.q0)} is not {b}^{cert.m1}/{s.u1}")
    if cert.v.text != DIGIT_CHARS[pair.d1] * cert.m1:
        problems.append("v is not d1 repeated m1 times")
    if not isinstance(first.word, Literal) or first.word.text != DIGIT_CHARS[pair.d2] + DIGIT_CHARS[pair.d1] * cert.m1:
        problems.append("w1 is not d2 followed by m1 copies of d1")
    if math.gcd(cert.q0 * first.p, q1) != 1:
        problems.append("gcd(q0*p1, q1) != 1")
    if problems:
        return CheckReport("initial", None, Verdict.FAIL, "; ".join(problems))
    witness = (
        f"u={s.u}={s.u1}*{s.u2}, m1={cert.m1}, {s.u1} | {b}^{cert.m1}, "
        f"{s.u2}*{q1} = {rhs} = {b}^{cert.m1 + 1}-1, q0={cert.q0}, gcd(q0*p1, q1)=1"
    )
    return CheckReport("initial", None, Verdict.PASS, witness)


def check_structure(cert: Certificate) -> CheckReport:
    pair, steps = cert.pair, cert.steps
    problems = []
    if [st.i for st in steps] != list(range(1, len(steps) + 1)):
        problems.append("step indices are not 1..k")
    if cert.depth > cert.params.max_depth:
        problems.append(f"depth {cert.depth} exceeds max_depth {cert.params.max_depth}")
    first = steps[0]
    if first.m != cert.m1 or first.N != cert.m1 + 1 or cert.N != first.N:
        problems.append("step 1 must have m = m1 and N = m1 + 1")
    if cert.u != pair.u:
        problems.append(f"u must be d2 - d1 = {pair.u}")
    for k, st in enumerate(steps):
        if st.word.length != st.N:
            problems.append(f"|w_{st.i}| = {short_int(st.word.length)} but N_{st.i} = {short_int(st.N)}")
        if st.sigma != (1 if st.word.last_digit == pair.d1 else -1):
            problems.append(f"sigma_{st.i} disagrees with the last digit of w_{st.i}")
        if not 0 < st.p < st.q:
            problems.append(f"p_{st.i}/q_{st.i} is not in (0, 1)")
        elif gmpy2.gcd(st.p, st.q) != 1:
            problems.append(f"p_{st.i}/q_{st.i} is not reduced")
        if k == 0:
            continue
        prev = steps[k - 1]
        if st.N != (st.m + 1) * prev.N:
            problems.append(f"N_{st.i} != (m_{st.i}+1)*N_{prev.i}")
        if st.sigma != -prev.sigma:
            problems.append(f"sigma_{st.i} does not alternate")
        if st.q <= prev.q:
            problems.append(f"q_{st.i} <= q_{prev.i}")
        w = st.word
        if not (
            isinstance(w, Composite)
            and w.base is prev.word
            and w.power == st.m
            and w.flip
            and w.alphabet == (pair.d1, pair.d2)
        ):
            problems.append(f"w_{st.i} is not w_{prev.i}^m_{st.i} w_{prev.i}'")
    expect_c1 = 1 if (pair.d1, pair.d2) == (0, 1) and 0 in pair.full else first.q
    if cert.c1 != expect_c1:
        problems.append(f"c1 should be {short_int(expect_c1)}")
    if cert.lookahead is not None:
        m, n = cert.lookahead
        if m < 1 or n != (m + 1) * steps[-1].N:
            problems.append("next: N != (m+1)*N_k")
    if problems:
        return CheckReport("structure", None, Verdict.FAIL, "; ".join(problems[:4]))
    return CheckReport(
        "structure",
        None,
        Verdict.PASS,
        f"k={cert.depth} steps, N and words chained, signs {''.join('+' if s.sigma > 0 else '-' for s in steps[:20])}, c1={short_int(cert.c1)}",
    )


def check_budget(cert: Certificate, options: VerifyOptions) -> CheckReport:
    p = cert.params
    b = cert.b
    problems = []
    for st in cert.steps[1:]:
        if bits_upper(st.N, b) > p.max_bits:
            problems.append(f"q_{st.i} may exceed max_bits={p.max_bits}")
    nxt = None if cert.lookahead is None else bits_upper(cert.lookahead[1], b)
    if cert.status == COMPLETE and cert.depth != p.max_depth:
        problems.append(f"status complete but depth {cert.depth} != max_depth {p.max_depth}")
    if cert.status == EXHAUSTED:
        if cert.depth >= p.max_depth:
            problems.append("budget-exhausted at full depth")
        if nxt is None or nxt <= p.max_bits:
            problems.append("budget-exhausted but the next step fits the budget")
    witness = (
        f"status={cert.status}, depth {cert.depth}/{p.max_depth}, max_bits={p.max_bits}, "
        f"next step ~{'?' if nxt is None else short_int(nxt)} bits; "
        f"verified with digit budget {options.digit_budget}, log precision {options.max_precision}"
    )
    if problems:
        return CheckReport("budget", None, Verdict.FAIL, "; ".join(problems) + "; " + witness)
    return CheckReport("budget", None, Verdict.PASS, witness)


def _next_m(cert: Certificate, i: int) -> int | None:
    if i < cert.depth:
        return cert.steps[i].m
    if i == cert.depth and cert.lookahead is not None:
        return cert.lookahead[0]
    return None


def check_selection(cert: Certificate, i: int, psi: _PsiCache) -> CheckReport:
    m = _next_m(cert, i)
    name = "selection"
    if m is None:
        return CheckReport(name, i, Verdict.SKIPPED, "budget: m_{i+1} not recorded", False)
    st = cert.steps[i - 1]
    strict = cert.params.mode == STRICT
    bound = psi(st.q)
    problems = []
    if m < 1:
        problems.append("m must be positive")
    if i == 1:
        stride = st.q
        if (cert.q0 * st.p * (m + 1) + st.sigma) % st.q:
            problems.append(f"q0*p1*(m2+1) != {-st.sigma} mod q1")
        if strict and m < st.q:
            problems.append("strict mode needs m2 >= q1")
        floor = st.q if strict else 1
    else:
        stride = st.q
        if m % st.q:
            problems.append(f"q_{i} does not divide m_{i + 1}")
        floor = 1
    if not ratio_below(cert.u, cert.m1, (m + 1) * st.N, bound):
        problems.append(f"gap 1/(q_{i} q_{i + 1}) is not below Psi(q_{i})")
    prev = m - stride
    if prev >= floor and ratio_below(cert.u, cert.m1, (prev + 1) * st.N, bound):
        problems.append(f"smaller candidate m={short_int(prev)} already satisfies the gap condition")
    witness = f"m_{i + 1}={short_int(m)}, stride {short_int(stride)}, Psi(q_{i})={bound!r}"
    if problems:
        return CheckReport(name, i, Verdict.FAIL, "; ".join(problems) + "; " + witness)
    return CheckReport(name, i, Verdict.PASS, witness + ", minimal")


def check_identity(cert: Certificate, i: int) -> CheckReport:
    st = cert.steps[i - 1]
    b = cert.b
    lhs = b**cert.m1 * (b**st.N - 1)
    rhs = cert.u * _q_prev(cert, i) * st.q
    witness = f"{b}^{cert.m1}*({b}^{short_int(st.N)}-1) = {short_int(lhs)}, u*q_{i - 1}*q_{i} = {short_int(rhs)}"
    return CheckReport("identity", i, _ok(lhs == rhs), witness)


def check_determinant(cert: Certificate, i: int) -> CheckReport:
    a, c = cert.steps[i - 1], cert.steps[i]
    det = c.p * a.q - c.q * a.p
    witness = f"p_{i + 1}*q_{i} - q_{i + 1}*p_{i} = {short_int(det)}, sigma_{i} = {a.sigma:+d}"
    return CheckReport("determinant", i, _ok(det == a.sigma), witness)


def check_convergent_chain(cert: Certificate) -> CheckReport:
    name = "convergent_chain"
    if cert.depth < 2:
        return CheckReport(name, None, Verdict.SKIPPED, "budget: needs at least two steps", False)
    last = cert.steps[-1]
    if not 0 < last.p < last.q:
        return CheckReport(name, None, Verdict.FAIL, "deepest p/q is not in (0, 1)")
    canonical = continued_fraction(last.p, last.q)
    claimed = [(st.p, st.q) for st in cert.steps]
    c1 = cert.c1
    for label, quotients in (("canonical", canonical), ("alternate", _alternate_quotients(canonical))):
        if quotients is None:
            continue
        convs = convergents_of(quotients)
        exempt = c1 == 1 and convs and convs[0] == (0, 1)
        required = [cv for k, cv in enumerate(convs) if cv[1] >= c1 and not (exempt and k == 0)]
        if required == claimed:
            note = ""
            if exempt:
                if 0 not in cert.pair.full:
                    continue
                note = ", 0/1 below threshold lies in C as 0 is in D"
            return CheckReport(
                name,
                None,
                Verdict.PASS,
                f"{label} cf {format_quotients(quotients)}: convergents with q >= {short_int(c1)} "
                f"are exactly p_1/q_1..p_{cert.depth}/q_{cert.depth}{note}",
            )
    return CheckReport(
        name,
        None,
        Verdict.FAIL,
        f"cf {format_quotients(canonical)} of p_{cert.depth}/q_{cert.depth} does not reproduce the certificate chain",
    )


def check_membership(cert: Certificate, i: int) -> CheckReport:
    st = cert.steps[i - 1]
    b, full = cert.b, cert.pair.full
    used = _word_digits(st.word) | _word_digits(cert.v)
    num, den = periodic_parts(cert.v, st.word, b)
    equal = st.p * den == st.q * num
    inside = used <= full
    witness = (
        f"p_{i}/q_{i} {'=' if equal else '!='} (0.v w_{i} w_{i} ...)_{b}, "
        f"digits {_fmt_set(used)} {'within' if inside else 'outside'} D={_fmt_set(full)}"
    )
    return CheckReport("membership", i, _ok(equal and inside), witness)


def long_division_digits(p: int, q: int, b: int, count: int) -> str:
    """The first ``count`` base-b digits of p/q for 0 <= p < q."""
    if count == 0:
        return ""
    head = gmpy2.mpz(p) * gmpy2.mpz(b) ** count // q
    return int_to_digits(int(head), b, count)


def check_membership_digits(cert: Certificate, i: int, budget: int) -> CheckReport:
    st = cert.steps[i - 1]
    b, full = cert.b, cert.pair.full
    name = "membership_digits"
    if st.N > budget:
        return CheckReport(name, i, Verdict.SKIPPED, f"budget: N_{i}={short_int(st.N)} exceeds {budget} digits", False)
    count = min(budget, cert.m1 + 2 * st.N)
    got = long_division_digits(st.p, st.q, b, count)
    expected = cert.v.text[:count]
    stream = iter_digits(st.word)
    while len(expected) < count:
        chunk = "".join(DIGIT_CHARS[d] for _, d in zip(range(min(st.N, count - len(expected))), stream))
        expected += chunk
        if len(chunk) < st.N:
            break
        stream = iter_digits(st.word)
    seen = {int(c, 36) for c in set(got)}
    if got != expected:
        pos = next(k for k, (x, y) in enumerate(zip(got, expected)) if x != y) if got[: len(expected)] != expected else len(expected)
        return CheckReport(name, i, Verdict.FAIL, f"long division differs from v w_{i} w_{i} at digit {pos + 1}")
    if not seen <= full:
        return CheckReport(name, i, Verdict.FAIL, f"digits {_fmt_set(seen)} not within D={_fmt_set(full)}")
    return CheckReport(
        name, i, Verdict.PASS, f"{count} digits of p_{i}/q_{i} match v w_{i} w_{i}, digits {_fmt_set(seen)} within D={_fmt_set(full)}"
    )


def check_gap_bounds(cert: Certificate, i: int, psi: _PsiCache) -> CheckReport:
    name = "gap_bounds"
    at = _n_at(cert, i + 1)
    if at is None or not at[1]:
        return CheckReport(name, i, Verdict.SKIPPED, f"budget: N_{i + 1} unknown, only |xi - p_{i}/q_{i}| < |Delta_{i}| is available", False)
    n_next = at[0]
    st = cert.steps[i - 1]
    bound = psi(st.q)
    gap = ratio_below(cert.u, cert.m1, n_next, bound)
    lo, hi = delta_bracket(cert, i)
    _, hi_next = delta_bracket(cert, i + 1)
    # the interval (|D_i| - |D_{i+1}|, |D_i|) sits inside (|D_i|/2, |D_i|)
    nested = hi_next is not None and hi_next * 2 < lo
    witness = (
        f"|Delta_{i}| in [{lo!r}, {hi!r}] vs Psi(q_{i})={bound!r}: {'below' if gap else 'NOT below'}; "
        f"|Delta_{i + 1}| <= {hi_next!r} {'<' if nested else 'not <'} |Delta_{i}|/2"
    )
    return CheckReport(name, i, _ok(gap and nested), witness)


def check_growth(cert: Certificate, i: int, options: VerifyOptions) -> CheckReport:
    st = cert.steps[i - 1]
    b = cert.b
    n_prev = 1 if i == 1 else cert.steps[i - 2].N
    e_low = st.m * n_prev
    low_ok = _cmp_int_pow(st.q, b, e_low) >= 0
    high_ok = _cmp_int_pow(st.q, b, st.N) < 0
    witness = f"{b}^{short_int(e_low)} <= q_{i} < {b}^{short_int(st.N)}: {low_ok and high_ok}"
    verdict = _ok(low_ok and high_ok)
    if cert.params.mode == STRICT and i >= 2 and verdict is Verdict.PASS:
        qp = cert.steps[i - 2].q
        order = compare_via_logs(st.q, Power(qp, qp), b, options.max_precision)
        verdict = _order_verdict(order, (Order.GREATER, Order.EQUAL))
        witness += f"; q_{i} >= q_{i - 1}^q_{i - 1}: {order.name.lower()}"
    return CheckReport("growth", i, verdict, witness)


def check_theorem_upper(cert: Certificate, i: int, psi: _PsiCache, options: VerifyOptions) -> CheckReport:
    strict = cert.params.mode == STRICT
    st = cert.steps[i - 1]
    at = _n_at(cert, i + 1)
    lo, hi = delta_bracket(cert, i)
    bound = psi(st.q)
    if at[1]:
        below_psi = ratio_below(cert.u, cert.m1, at[0], bound)
    else:
        below_psi = hi < bound
    order = compare_via_logs(hi, Power(st.q, -st.q), cert.b, options.max_precision)
    verdict = _ok(below_psi)
    if verdict is Verdict.PASS:
        verdict = _order_verdict(order, (Order.LESS,))
    witness = (
        f"|xi - p_{i}/q_{i}| < |Delta_{i}| <= {hi!r}; vs Psi(q_{i}): {'below' if below_psi else 'NOT below'}; "
        f"vs q_{i}^-q_{i}: {order.name.lower()}"
    )
    if not strict:
        witness += " (relaxed mode: informational)"
    return CheckReport("theorem_upper", i, verdict, witness, strict)


def check_theorem_lower(cert: Certificate, i: int, psi: _PsiCache, options: VerifyOptions) -> CheckReport:
    name = "theorem_lower"
    st = cert.steps[i - 1]
    lo, _ = delta_bracket(cert, i)
    _, hi_next = delta_bracket(cert, i + 1)
    if lo is None or hi_next is None:
        return CheckReport(name, i, Verdict.SKIPPED, f"budget: no two-sided bound at index {i}", False)
    low = sandwich_low(lo, hi_next)
    eps = cert.params.epsilon
    target = Product(psi(st.q), Power(st.q, -(1 + eps) * st.q))
    if low is None:
        return CheckReport(name, i, Verdict.FAIL, f"no positive lower bound for |xi - p_{i}/q_{i}|")
    order = compare_via_logs(low, target, cert.b, options.max_precision)
    witness = f"|xi - p_{i}/q_{i}| > {low!r} vs Psi(q)*q^-(1+{eps})q with c2=1: {order.name.lower()}"
    return CheckReport(name, i, _order_verdict(order, (Order.GREATER,)), witness)


def _apply_threshold(reports: list[CheckReport]) -> None:
    """Mark lower-clause results below the first index from which all pass as informational."""
    checked = [r for r in reports if r.verdict is not Verdict.SKIPPED]
    threshold = None
    for r in reversed(checked):
        if r.verdict is not Verdict.PASS:
            break
        threshold = r.scope
    note = f"threshold index {threshold}" if threshold is not None else "no threshold index reached"
    for r in reports:
        if threshold is None or r.scope < threshold:
            r.mandatory = False
        r.witness += f"; {note}"


def _options_from_record(rec) -> VerifyOptions:
    if not isinstance(rec, dict) or set(rec) != {"digit_budget", "max_precision"}:
        raise CertificateError("verification.options must hold digit_budget and max_precision")
    budget, precision = rec["digit_budget"], rec["max_precision"]
    if not all(isinstance(x, int) and x > 0 for x in (budget, precision)):
        raise CertificateError("verification.options must be positive integers")
    return VerifyOptions(budget, precision)


def check_recorded(cert: Certificate, reports: list[CheckReport], options: VerifyOptions) -> CheckReport:
    """Recompute under the recorded options and compare with the stored results."""
    name = "recorded"
    if cert.recorded_options is None:
        return CheckReport(name, None, Verdict.SKIPPED, "certificate carries no recorded results", False)
    names = {r.check for r in reports}
    if cert.recorded_options != options.to_record():
        recorded_opts = _options_from_record(cert.recorded_options)
        reports = _run_checks(cert, VerifyOptions(recorded_opts.digit_budget, recorded_opts.max_precision, frozenset(names)))
    mine = [(r.check, r.scope_label, r.verdict.value, r.witness) for r in reports]
    theirs = [
        (r.get("check"), r.get("scope"), r.get("verdict"), r.get("witness"))
        for r in cert.recorded
        if r.get("check") in names
    ]
    if mine == theirs:
        return CheckReport(name, None, Verdict.PASS, f"{len(mine)} recorded results reproduced")
    for a, c in zip(mine, theirs):
        if a != c:
            return CheckReport(name, None, Verdict.FAIL, f"recorded result {c[0]}[{c[1]}] differs from recomputed {a[0]}[{a[1]}]")
    return CheckReport(name, None, Verdict.FAIL, f"{len(theirs)} recorded results for {len(mine)} recomputed")


CHECK_NAMES = (
    "initial",
    "structure",
    "budget",
    "selection",
    "identity",
    "determinant",
    "membership",
    "membership_digits",
    "gap_bounds",
    "growth",
    "theorem_upper",
    "theorem_lower",
    "convergent_chain",
    "recorded",
)


def _guard(name: str, scope: int | None, fn: Callable[[], CheckReport]) -> CheckReport:
    try:
        return fn()
    except (CantorError, ArithmeticError, ValueError) as exc:
        return CheckReport(name, scope, Verdict.FAIL, f"error: {exc}")


def _run_checks(cert: Certificate, options: VerifyOptions) -> list[CheckReport]:
    psi = _PsiCache(cert)
    k = cert.depth
    out: list[CheckReport] = []

    def run(name: str, scopes, fn):
        if not options.wants(name):
            return []
        got = [_guard(name, s, lambda s=s: fn(s)) for s in scopes]
        out.extend(got)
        return got

    run("initial", [None], lambda _: check_initial(cert))
    run("structure", [None], lambda _: check_structure(cert))
    run("budget", [None], lambda _: check_budget(cert, options))
    idx = range(1, k + 1)
    run("selection", idx, lambda i: check_selection(cert, i, psi))
    run("identity", idx, lambda i: check_identity(cert, i))
    run("determinant", range(1, k), lambda i: check_determinant(cert, i))
    run("membership", idx, lambda i: check_membership(cert, i))
    run("membership_digits", idx, lambda i: check_membership_digits(cert, i, options.digit_budget))
    run("gap_bounds", idx, lambda i: check_gap_bounds(cert, i, psi))
    run("growth", idx, lambda i: check_growth(cert, i, options))
    run("theorem_upper", idx, lambda i: check_theorem_upper(cert, i, psi, options))
    lower = run("theorem_lower", idx, lambda i: check_theorem_lower(cert, i, psi, options))
    _apply_threshold(lower)
    run("convergent_chain", [None], lambda _: check_convergent_chain(cert))
    return out


def verify_all(cert: Certificate, options: VerifyOptions | None = None) -> list[CheckReport]:
    """Run every requested check over all indices, then compare with recorded results."""
    options = options or VerifyOptions()
    out = _run_checks(cert, options)
    if options.wants("recorded"):
        out.append(_guard("recorded", None, lambda: check_recorded(cert, list(out), options)))
    return out


def verify_text(text: str, options: VerifyOptions | None = None) -> list[CheckReport]:
    """Parse and verify; a parse failure becomes a single failing report."""
    try:
        cert = loads(text)
    except CertificateError as exc:
        return [CheckReport("parse", None, Verdict.FAIL, str(exc))]
    return verify_all(cert, options)


def overall_pass(reports: list[CheckReport]) -> bool:
    return not any(r.mandatory and r.verdict in (Verdict.FAIL, Verdict.INDISTINGUISHABLE) for r in reports)


def record_results(cert: Certificate, reports: list[CheckReport], options: VerifyOptions) -> Certificate:
    """Return a copy of cert carrying the given verification results."""
    kept = tuple(
        {"check": r.check, "scope": r.scope_label, "verdict": r.verdict.value, "witness": r.witness}
        for r in reports
        if r.check != "recorded"
    )
    return replace(cert, recorded=kept, recorded_options=options.to_record())


def format_table(reports: list[CheckReport]) -> str:
    rows = [("check", "scope", "verdict", "witness")]
    for r in reports:
        verdict = r.verdict.value + ("" if r.mandatory else " (info)")
        rows.append((r.check, r.scope_label, verdict, r.witness))
    widths = [max(len(row[c]) for row in rows) for c in range(3)]
    lines = [
        "  ".join(row[c].ljust(widths[c]) for c in range(3)) + "  " + row[3]
        for row in rows
    ]
    lines.insert(1, "  ".join("-" * w for w in widths) + "  " + "-" * 7)
    return "\n".join(lines)


def reports_to_json(reports: list[CheckReport]) -> str:
    doc = {"overall": "pass" if overall_pass(reports) else "fail", "checks": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2)
